"""B-spline bases on normalized time and Gauss collocation points.

A trajectory is a weighted sum of B-splines of order d (d coefficients per
polynomial segment) with smoothness s at the interior breakpoints (the
spline is C^(s-1) there), giving N_P*(d-s) + s free parameters over N_P
segments.  Evaluation is Cox-de Boor; derivatives are analytic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .exceptions import ParameterError


@dataclass(frozen=True, eq=False)
class SplineBasis:
    breakpoints: np.ndarray     # (N_BP,) strictly increasing, on [0, 1]
    order: int                  # d: coefficients per segment (degree + 1)
    smoothness: int             # s: matched quantities at interior breakpoints
    knots: np.ndarray
    n_funcs: int

    @classmethod
    def make(cls, breakpoints, order: int, smoothness: int) -> "SplineBasis":
        bp = np.asarray(breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or np.any(np.diff(bp) <= 0):
            raise ParameterError("breakpoints must be strictly increasing, >= 2")
        if order < 1 or not (0 <= smoothness < order):
            raise ParameterError("need order >= 1 and 0 <= smoothness < order")
        mult = order - smoothness
        knots = np.concatenate([np.repeat(bp[0], order)]
                               + [np.repeat(b, mult) for b in bp[1:-1]]
                               + [np.repeat(bp[-1], order)])
        n_p = bp.size - 1
        n_funcs = n_p * (order - smoothness) + smoothness
        assert n_funcs == knots.size - order
        return cls(breakpoints=bp, order=order, smoothness=smoothness,
                   knots=knots, n_funcs=n_funcs)

    @classmethod
    def uniform(cls, n_breakpoints: int, order: int, smoothness: int) -> "SplineBasis":
        return cls.make(np.linspace(0.0, 1.0, n_breakpoints), order, smoothness)

    @property
    def n_segments(self) -> int:
        return self.breakpoints.size - 1

    def _rows(self, tau: float):
        """Cox-de Boor recursion; returns (degree-g values over the n basis
        functions, degree-(g-1) values over the n+1 lower functions on the
        same knot vector)."""
        t = self.knots
        n = self.n_funcs
        g = self.order - 1
        tau = min(max(tau, t[0]), t[-1])
        b = np.zeros(n + g)    # degree-0 seed over all knot spans
        # half-open spans, except the last non-empty span which is closed
        for i in range(n + g):
            if t[i] <= tau < t[i + 1]:
                b[i] = 1.0
        if tau == t[-1]:
            for i in range(n + g - 1, -1, -1):
                if t[i] < t[i + 1]:
                    b[i] = 1.0
                    break
        prev = b
        for deg in range(1, g + 1):
            nb = np.zeros(n + g - deg)
            for i in range(n + g - deg):
                left = 0.0
                if t[i + deg] > t[i]:
                    left = (tau - t[i]) / (t[i + deg] - t[i]) * b[i]
                right = 0.0
                if t[i + deg + 1] > t[i + 1]:
                    right = (t[i + deg + 1] - tau) / (t[i + deg + 1] - t[i + 1]) * b[i + 1]
                nb[i] = left + right
            prev = b
            b = nb
        return b, prev

    def design(self, tau, deriv: int = 0) -> np.ndarray:
        """Design matrix of basis values (or first derivatives) at tau."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if deriv == 0:
            return np.array([self._rows(x)[0] for x in tau])
        if deriv != 1:
            raise ParameterError("only derivative orders 0 and 1 are supported")
        return np.array([self._deriv_row(x) for x in tau])

    def _deriv_row(self, tau: float) -> np.ndarray:
        """d/dtau of every basis function via the knot-difference formula."""
        g = self.order - 1
        if g == 0:
            return np.zeros(self.n_funcs)
        _, bl = self._rows(tau)     # degree-(g-1) values, n+1 of them
        t = self.knots
        out = np.zeros(self.n_funcs)
        for i in range(self.n_funcs):
            a = 0.0
            if t[i + g] > t[i]:
                a += bl[i] / (t[i + g] - t[i])
            if t[i + g + 1] > t[i + 1]:
                a -= bl[i + 1] / (t[i + g + 1] - t[i + 1])
            out[i] = g * a
        return out


@dataclass(eq=False)
class SplineTrajectory:
    basis: SplineBasis
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape[-1] != self.basis.n_funcs:
            raise ParameterError(
                f"need {self.basis.n_funcs} weights, got {self.weights.shape[-1]}")

    def value(self, tau, deriv: int = 0):
        d = self.basis.design(tau, deriv=deriv)
        return d @ self.weights if self.weights.ndim == 1 else d @ self.weights.T


def collocation_points(n_segments: int, q: int, breakpoints=None) -> np.ndarray:
    """Legendre-Gauss nodes mapped into each segment's interior.

    Nodes never coincide with breakpoints (Gauss nodes are strictly inside
    (-1, 1)); q = 1 puts one node at each segment midpoint.
    """
    if q < 1:
        raise ParameterError("need at least one collocation point per segment")
    if breakpoints is None:
        breakpoints = np.linspace(0.0, 1.0, n_segments + 1)
    breakpoints = np.asarray(breakpoints, dtype=float)
    nodes, _ = leggauss(q)
    nodes = np.sort(nodes)
    out = []
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        out.extend(0.5 * (a + b) + 0.5 * (b - a) * nodes)
    return np.array(out)


def fit_spline(basis: SplineBasis, tau_samples, values) -> np.ndarray:
    """Least-squares spline weights through sampled values.

    values: (n_samples,) or (n_samples, n_series); returns matching weights.
    """
    d = basis.design(tau_samples)
    w, *_ = np.linalg.lstsq(d, np.asarray(values, dtype=float), rcond=None)
    return w
