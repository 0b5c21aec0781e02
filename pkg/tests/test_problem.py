"""Charging-problem declaration: cost decomposition, constraint catalogue,
variable-layout transform."""

import numpy as np
import pytest

from packcharge import problem as pb
from packcharge.exceptions import ParameterError


def test_default_bounds_match_study_setup():
    b = pb.OperatingBounds()
    assert (b.i_b_min, b.i_b_max) == (-6.0, 0.0)
    assert (b.i0_min, b.i0_max) == (-16.0, -12.0)
    assert (b.v_min, b.v_max) == (2.5, 4.2)
    assert b.t_min == pytest.approx(278.15)
    assert b.t_max == pytest.approx(318.15)
    assert b.t_f_max == 2000.0
    w = pb.Weights()
    assert (w.alpha, w.beta1, w.beta2, w.beta3) == (0.5, 1.0, 5e8, 5e8)


def test_cost_alpha_one_is_pure_time():
    p = pb.ChargingProblem(scheme=pb.DCT, weights=pb.Weights(alpha=1.0)).validate()
    c = pb.cost(p, [500.0, 400.0], [6e-9, 6e-9], [5e-9, 5e-9])
    assert c.j == pytest.approx(p.weights.beta1 * c.h, rel=1e-14)


def test_cost_alpha_zero_is_pure_degradation():
    p = pb.ChargingProblem(scheme=pb.DCT, weights=pb.Weights(alpha=0.0)).validate()
    c = pb.cost(p, [500.0, 400.0], [6e-9, 6.5e-9], [5e-9, 5e-9])
    w = p.weights
    assert c.j == pytest.approx(w.beta2 * c.g1 + w.beta3 * c.g2, rel=1e-14)


def test_cost_mean_charging_time_table_row():
    # two cells finishing at 595 s and 393 s average to 494 s
    p = pb.ChargingProblem(scheme=pb.DCT).validate()
    c = pb.cost(p, [595.0, 393.0], [5.3e-9, 5.28e-9], [5e-9, 5e-9])
    assert c.h == pytest.approx(494.0, abs=1e-12)


def test_cost_recomposition_identity():
    rngs = np.random.default_rng(5)
    for _ in range(20):
        a = float(rngs.uniform(0, 1))
        p = pb.ChargingProblem(scheme=pb.DCT, weights=pb.Weights(alpha=a)).validate()
        tf = rngs.uniform(300, 700, 2)
        le = 5e-9 + rngs.uniform(0, 1e-9, 2)
        c = pb.cost(p, tf, le, [5e-9, 5e-9])
        assert c.j == pytest.approx(c.recompose(p.weights), rel=1e-14)


def test_cost_g2_is_time_averaged_rate():
    p = pb.ChargingProblem(scheme=pb.DCT).validate()
    c = pb.cost(p, [500.0, 250.0], [6e-9, 5.5e-9], [5e-9, 5e-9])
    assert c.g2 == pytest.approx(0.5 * (1e-9 / 500 + 0.5e-9 / 250), rel=1e-14)


def test_sct_requires_shared_time():
    p = pb.ChargingProblem(scheme=pb.SCT).validate()
    with pytest.raises(ParameterError):
        pb.cost(p, [500.0, 400.0], [6e-9, 6e-9], [5e-9, 5e-9])
    c = pb.cost(p, [450.0, 450.0], [6e-9, 6e-9], [5e-9, 5e-9])
    assert c.h == 450.0


def test_constraint_set_final_time_counts(module2):
    sct = pb.ChargingProblem(scheme=pb.SCT).validate()
    dct = pb.ChargingProblem(scheme=pb.DCT).validate()
    n_tf_sct = [c for c in pb.constraint_set(sct, module2) if c.kind == "box-final-time"]
    n_tf_dct = [c for c in pb.constraint_set(dct, module2) if c.kind == "box-final-time"]
    assert len(n_tf_sct) == 1
    assert len(n_tf_dct) == 2
    term_dct = [c for c in pb.constraint_set(dct, module2) if c.kind == "terminal-soc"]
    assert len(term_dct) == 2


def test_optimization_variable_counts(module2):
    n_s = 44
    sct = pb.ChargingProblem(scheme=pb.SCT).validate()
    dct = pb.ChargingProblem(scheme=pb.DCT).validate()
    assert pb.n_opt_variables(dct, n_s) == n_s + 2 * 2 + 1
    assert pb.n_opt_variables(sct, n_s) == n_s + 2 + 2


def test_cell_current_layout_bounds_and_roundtrip():
    p = pb.ChargingProblem(scheme=pb.DCT).validate()
    q = pb.to_cell_current_layout(p)
    assert q.layout == "cell-current"
    assert q.bounds.i_cell_min == -16.0
    assert q.bounds.i_cell_max == -6.0
    with pytest.raises(ParameterError):
        pb.to_cell_current_layout(q)

    rng = np.random.default_rng(11)
    for _ in range(50):
        i0 = rng.uniform(-16, -12)
        ib = rng.uniform(-6, 0, 2)
        i_cell = i0 - ib
        i0r, ibr = pb.reconstruct_module_split(i_cell)
        # identity I_B_k = I_0 - I_cell_k holds by definition
        assert np.allclose(i0r - ibr, i_cell, atol=1e-14)
        assert np.all(ibr <= 1e-14)          # balancing current is non-positive
        assert np.any(np.isclose(ibr, 0.0, atol=1e-12))  # one cell takes full I_0


def test_identical_cell_currents_reconstruct_zero_balancing():
    i0, ib = pb.reconstruct_module_split(np.array([-10.0, -10.0]))
    assert i0 == -10.0
    assert np.allclose(ib, 0.0)


def test_problem_dict_roundtrip():
    p = pb.ChargingProblem(scheme=pb.SCT, weights=pb.Weights(alpha=0.25),
                           soc_initial=(0.3, 0.35), soc_target=0.75).validate()
    q = pb.ChargingProblem.from_dict(p.to_dict())
    assert q.scheme == p.scheme
    assert q.weights.alpha == p.weights.alpha
    assert q.soc_initial == p.soc_initial
    assert q.bounds.v_max == p.bounds.v_max
