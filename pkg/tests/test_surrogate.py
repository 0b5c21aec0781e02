"""Surrogate pipeline: calibration search, polynomial fit, evaluation."""

import numpy as np
import pytest

from packcharge import surrogate as sg
from packcharge.exceptions import FitError


@pytest.fixture(scope="module")
def model18(cell0):
    """Small calibrated model: full current grid, two temperatures."""
    return sg.calibrate_grid(cell0, [-6.0, -8.0, -10.0, -12.0, -14.0, -16.0],
                             [288.15, 308.15])


def test_fit_recovers_known_polynomial():
    rng = np.random.default_rng(3)
    coefs = rng.standard_normal(6) * [1, 5, 10, 20, 50, 120] + [0, 0, 0, 0, 0, 200]
    currents = np.linspace(-16, -6, 6)
    mid, half = -11.0, 5.0

    def poly(i):
        u = (i - mid) / half
        return np.polyval(coefs, u)

    samples = [(i, 298.15, poly(i)) for i in currents]
    model = sg.fit(samples)
    dense = np.linspace(-16, -6, 301)
    got = model.evaluate(dense, 298.15)
    expected = poly(dense)
    assert np.max(np.abs(got - expected) / np.maximum(1.0, np.abs(expected))) < 1e-10
    assert np.max(np.abs(model.coeffs[0] - coefs) / np.abs(coefs)) < 1e-10


def test_six_point_fit_interpolates_exactly():
    currents = np.linspace(-16, -6, 6)
    samples = [(i, 288.15, 100 + 3 * i + 0.2 * i ** 2) for i in currents]
    model = sg.fit(samples)
    assert np.abs(model.residuals).max() < 1e-9


def test_fit_rejects_duplicate_currents():
    samples = [(-6.0, 298.15, 1.0)] * 2 + [(i, 298.15, 1.0)
                                           for i in (-8, -10, -12, -14)]
    with pytest.raises(FitError):
        sg.fit(samples)


def test_constant_thickness_objective_is_monotone(cell0):
    """L_lf grows monotonically with the pinned concentration, so the
    calibration minimizer is unique (dense scan)."""
    cs = np.linspace(0.0, 2 * cell0.eps_sei * cell0.c_solv_bulk, 41)
    ls = [sg._terminal_sei(cell0, -10.0, 298.15, (0.2, 0.8), 5e-9, "surrogate",
                           surrogate=sg._ConstantSolvent(c))[0] for c in cs]
    assert np.all(np.diff(ls) > 0)


def test_zero_residual_fixed_point(cell0):
    """If the target equals the constant-solvent thickness at some c, the
    search returns that c."""
    c_ref = cell0.eps_sei * cell0.c_solv_bulk
    l_ref = sg._terminal_sei(cell0, -8.0, 298.15, (0.2, 0.8), 5e-9, "surrogate",
                             surrogate=sg._ConstantSolvent(c_ref))[0]
    c_star, resid = sg.match_constant_solvent(cell0, -8.0, 298.15, l_ref)
    assert c_star == pytest.approx(c_ref, rel=1e-4)
    assert resid < 1e-6


def test_calibration_point_and_determinism(cell0):
    a = sg.calibrate_point(cell0, -12.0, 298.15)
    b = sg.calibrate_point(cell0, -12.0, 298.15)
    assert a == b                          # bit-reproducible pipeline
    c_star, resid, l_hf = a
    assert resid < 1e-3
    assert 0 < c_star < 2 * cell0.eps_sei * cell0.c_solv_bulk


def test_evaluate_at_training_point(model18):
    for it, t in enumerate(model18.temps):
        for j, i in enumerate(model18.currents):
            got = model18.evaluate(float(i), float(t))
            assert got == pytest.approx(model18.c_star[it, j], rel=1e-9, abs=1e-9)


def test_temperature_interpolation_is_linear(model18):
    t_mid = 0.5 * (model18.temps[0] + model18.temps[1])
    for i in (-15.0, -9.5, -7.0):
        lo = model18.evaluate(i, float(model18.temps[0]))
        hi = model18.evaluate(i, float(model18.temps[1]))
        assert model18.evaluate(i, t_mid) == pytest.approx(0.5 * (lo + hi), rel=1e-12)


def test_envelope_clamping_warns(model18, caplog):
    import logging
    with caplog.at_level(logging.WARNING, logger="packcharge.surrogate"):
        edge = model18.evaluate(-6.0, 288.15)
        out = model18.evaluate(-2.0, 270.0)
    assert any("clamping" in r.message for r in caplog.records)
    assert out == pytest.approx(model18.evaluate(-6.0, 288.15), rel=1e-12)
    assert edge >= 0.0


def test_save_load_roundtrip(model18, tmp_path):
    path = tmp_path / "model.json"
    model18.save(path)
    back = sg.SurrogateModel.load(path)
    dense = np.linspace(-16, -6, 50)
    for t in (288.15, 295.0, 308.15):
        assert np.allclose(back.evaluate(dense, t), model18.evaluate(dense, t),
                           rtol=1e-12)
    # persisted physical-current coefficients evaluate to the same polynomial
    import json
    d = json.loads(path.read_text())
    ci = np.array(d["coefficients_i_ascending"][0])
    vals = sum(c * dense ** p for p, c in enumerate(ci))
    assert np.allclose(vals, model18.evaluate(dense, 288.15), rtol=1e-8)


def test_committed_model_matches_fresh_calibration(cell0):
    from packcharge.surrogate import load_default_surrogate
    model = load_default_surrogate()
    c_star, _, _ = sg.calibrate_point(cell0, -10.0, 298.15)
    stored = model.c_star[list(model.temps).index(298.15),
                          list(model.currents).index(-10.0)]
    assert stored == pytest.approx(c_star, rel=1e-5)


def test_surrogate_full_charge_matches_hf(cell0):
    """Surrogate-mode 5C/25C charge ends within 1% of the high-fidelity SEI
    thickness (and drops the solvent states)."""
    from packcharge.surrogate import load_default_surrogate
    model = load_default_surrogate()
    l_hf, _ = sg._terminal_sei(cell0, -10.0, 298.15, (0.2, 0.8), 5e-9, "hf")
    l_lf, _ = sg._terminal_sei(cell0, -10.0, 298.15, (0.2, 0.8), 5e-9,
                               "surrogate", surrogate=model)
    assert abs(l_lf - l_hf) / l_hf < 0.01
