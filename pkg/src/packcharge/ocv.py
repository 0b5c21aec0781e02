"""Open-circuit potential curves.

Electrode OCPs are tabulated (stoichiometry, volts) pairs interpolated with a
monotone cubic (Fritsch-Carlson / PCHIP).  Evaluation is written against plain
arithmetic so it accepts float arrays and forward-mode dual arrays alike; the
segment lookup always uses the float values.  Queries outside the tabulated
domain raise ExtrapolationError rather than clamping.
"""

from __future__ import annotations

import csv

import numpy as np
from scipy.interpolate import PchipInterpolator

from .exceptions import ExtrapolationError, ParameterError


class OcvCurve:
    """Monotone cubic interpolant of a tabulated open-circuit potential."""

    def __init__(self, theta: np.ndarray, volts: np.ndarray, name: str = "ocv"):
        theta = np.asarray(theta, dtype=float)
        volts = np.asarray(volts, dtype=float)
        if theta.ndim != 1 or theta.shape != volts.shape or theta.size < 4:
            raise ParameterError(f"{name}: need matching 1-D arrays with >= 4 points")
        if np.any(np.diff(theta) <= 0):
            raise ParameterError(f"{name}: stoichiometry column must be strictly increasing")
        self.name = name
        self.theta = theta
        self.volts = volts
        # PchipInterpolator stores per-segment cubic coefficients in the local
        # variable (theta - theta[i]); keep them as plain arrays so both the
        # generic and the numba paths can evaluate the same polynomial.
        p = PchipInterpolator(theta, volts, extrapolate=False)
        self.coeffs = np.ascontiguousarray(p.c)  # (4, n_segments), highest power first

    @property
    def domain(self):
        return float(self.theta[0]), float(self.theta[-1])

    def _segments(self, x_float: np.ndarray) -> np.ndarray:
        lo, hi = self.theta[0], self.theta[-1]
        if np.any(x_float < lo) or np.any(x_float > hi):
            bad = x_float[(x_float < lo) | (x_float > hi)]
            raise ExtrapolationError(
                f"{self.name}: stoichiometry {np.atleast_1d(bad).ravel()[0]:.6g} outside "
                f"tabulated domain [{lo:.4g}, {hi:.4g}]"
            )
        idx = np.searchsorted(self.theta, x_float, side="right") - 1
        return np.clip(idx, 0, self.theta.size - 2)

    def __call__(self, x):
        """Potential [V] at surface stoichiometry x (float array or dual)."""
        from .dual import value_of

        xf = np.asarray(value_of(x), dtype=float)
        idx = self._segments(xf)
        c3, c2, c1, c0 = (self.coeffs[k][idx] for k in range(4))
        t = x - self.theta[idx]
        return ((c3 * t + c2) * t + c1) * t + c0

    def derivative(self, x):
        """dU/dtheta at x (float path only)."""
        xf = np.asarray(x, dtype=float)
        idx = self._segments(xf)
        c3, c2, c1, _ = (self.coeffs[k][idx] for k in range(4))
        t = xf - self.theta[idx]
        return (3.0 * c3 * t + 2.0 * c2) * t + c1

    @classmethod
    def from_csv(cls, path, name=None) -> "OcvCurve":
        """Load a two-column CSV (stoichiometry, volts); '#' lines are comments."""
        theta, volts = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                theta.append(float(row[0]))
                volts.append(float(row[1]))
        return cls(np.array(theta), np.array(volts), name=name or str(path))
