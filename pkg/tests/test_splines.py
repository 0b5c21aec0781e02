"""B-spline bases and collocation points against independent oracles."""

import numpy as np
import pytest
from scipy.interpolate import BSpline
from scipy.special import eval_legendre

from packcharge.exceptions import ParameterError
from packcharge.splines import (SplineBasis, SplineTrajectory,
                                collocation_points, fit_spline)


def test_free_parameter_count_formula():
    for n_bp, d, s in [(21, 3, 2), (9, 3, 2), (21, 2, 1), (5, 4, 2), (11, 1, 0)]:
        b = SplineBasis.uniform(n_bp, d, s)
        n_p = n_bp - 1
        assert b.n_funcs == n_p * (d - s) + s


def test_partition_of_unity():
    b = SplineBasis.uniform(9, 3, 2)
    tau = np.linspace(0, 1, 113)
    rows = b.design(tau)
    assert np.max(np.abs(rows.sum(axis=1) - 1.0)) < 1e-12
    traj = SplineTrajectory(b, np.full(b.n_funcs, 3.7))
    assert np.max(np.abs(traj.value(tau) - 3.7)) < 1e-12


def test_piecewise_constant_case():
    b = SplineBasis.uniform(6, 1, 0)      # order 1, no continuity
    w = np.array([1.0, -2.0, 3.0, 0.5, 7.0])
    traj = SplineTrajectory(b, w)
    for seg in range(5):
        for frac in (0.1, 0.5, 0.9):
            tau = (seg + frac) / 5.0
            assert traj.value(tau)[0] == pytest.approx(w[seg], abs=1e-14)


def test_matches_scipy_bspline():
    rng = np.random.default_rng(2)
    for d, s in [(3, 2), (2, 1), (4, 2), (4, 3)]:
        b = SplineBasis.uniform(8, d, s)
        w = rng.standard_normal(b.n_funcs)
        ref = BSpline(b.knots, w, d - 1)
        tau = np.linspace(0, 1, 97)
        ours = SplineTrajectory(b, w).value(tau)
        assert np.max(np.abs(ours - ref(tau))) < 1e-12


def test_per_segment_polynomial_oracle():
    """The curve restricted to one segment is a single polynomial of degree
    d-1: a Vandermonde interpolation through d interior samples must
    reproduce every other point of that segment to 1e-12."""
    rng = np.random.default_rng(4)
    b = SplineBasis.uniform(7, 3, 2)
    w = rng.standard_normal(b.n_funcs) * 5
    traj = SplineTrajectory(b, w)
    for seg in range(6):
        a_, b_ = seg / 6, (seg + 1) / 6
        t_fit = np.linspace(a_ + 0.05 / 6, b_ - 0.05 / 6, 3)
        coef = np.linalg.solve(np.vander(t_fit, 3), traj.value(t_fit))
        t_chk = np.linspace(a_ + 0.01 / 6, b_ - 0.01 / 6, 11)
        assert np.max(np.abs(np.polyval(coef, t_chk) - traj.value(t_chk))) < 1e-12


def test_derivative_matches_finite_differences():
    rng = np.random.default_rng(6)
    b = SplineBasis.uniform(9, 3, 2)
    w = rng.standard_normal(b.n_funcs)
    traj = SplineTrajectory(b, w)
    h = 1e-7
    for tau in rng.uniform(0.02, 0.98, 25):
        fd = (traj.value(tau + h)[0] - traj.value(tau - h)[0]) / (2 * h)
        assert traj.value(tau, deriv=1)[0] == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_smoothness_at_breakpoints():
    """d=3, s=2: the curve is C^1, and generically has a second-derivative
    jump at interior breakpoints."""
    rng = np.random.default_rng(8)
    b = SplineBasis.uniform(6, 3, 2)
    w = rng.standard_normal(b.n_funcs)
    traj = SplineTrajectory(b, w)
    eps = 1e-9
    for bp in b.breakpoints[1:-1]:
        v_l = traj.value(bp - eps)[0]
        v_r = traj.value(bp + eps)[0]
        d_l = traj.value(bp - eps, deriv=1)[0]
        d_r = traj.value(bp + eps, deriv=1)[0]
        assert v_r == pytest.approx(v_l, abs=1e-7)
        assert d_r == pytest.approx(d_l, abs=1e-5)


def test_collocation_points_midpoints_q1():
    cps = collocation_points(5, 1)
    assert np.allclose(cps, (np.arange(5) + 0.5) / 5, atol=1e-15)


def test_collocation_points_q2_legendre_roots():
    # roots of P2 recomputed by root-finding, mapped into each segment
    from scipy.optimize import brentq
    r_neg = brentq(lambda x: eval_legendre(2, x), -1.0, 0.0)
    r_pos = brentq(lambda x: eval_legendre(2, x), 0.0, 1.0)
    cps = collocation_points(4, 2)
    width = 0.25
    expected = []
    for seg in range(4):
        mid = (seg + 0.5) * width
        expected += [mid + 0.5 * width * r_neg, mid + 0.5 * width * r_pos]
    assert np.allclose(cps, expected, atol=1e-12)
    # closed form: (1 -+ 1/sqrt(3)) / 2 within the unit segment
    seg_rel = (cps[:2] - 0.0) / width
    assert seg_rel[0] == pytest.approx((1 - 1 / np.sqrt(3)) / 2, abs=1e-12)
    assert seg_rel[1] == pytest.approx((1 + 1 / np.sqrt(3)) / 2, abs=1e-12)


def test_collocation_points_interior_and_increasing():
    for q in (1, 2, 3, 5):
        cps = collocation_points(7, q)
        bps = np.linspace(0, 1, 8)
        assert np.all(np.diff(cps) > 0)
        assert np.min(np.abs(cps[:, None] - bps[None, :])) > 1e-6


def test_collocation_points_rejects_bad_q():
    with pytest.raises(ParameterError):
        collocation_points(5, 0)


def test_fit_spline_reproduces_smooth_curve():
    b = SplineBasis.uniform(21, 3, 2)
    tau = np.linspace(0, 1, 200)
    y = np.sin(2.5 * tau) + 0.3 * tau ** 2
    w = fit_spline(b, tau, y)
    err = np.max(np.abs(SplineTrajectory(b, w).value(tau) - y))
    assert err < 5e-5
