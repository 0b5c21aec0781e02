"""Surrogate for the solvent-diffusion dynamics.

The high-dimensional solvent transport PDE is replaced by a single constant
surface solvent concentration per (cell current, ambient temperature),
calibrated so that a constant-concentration charge reproduces the terminal
SEI thickness of the full model over the same SOC window.  Calibrated points
are fitted with a 5th-order polynomial in current per ambient temperature;
queries interpolate linearly between fitted temperatures and clamp at the
training envelope.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import CalibrationError, FitError, PackChargeError
from .params import CellParameters, ModuleParameters, initial_cell_state
from .simulate import InputProfile, simulate

log = logging.getLogger(__name__)

DEGREE = 5
FIT_TOL_REL = 1e-3          # calibration residual ceiling, |L_hf-L_lf|/L_hf
SEARCH_TOL_REL = 1e-6       # golden-section interval tolerance


class _ConstantSolvent:
    """Surrogate stub pinning the surface solvent concentration."""

    def __init__(self, c):
        self.c = float(c)

    def kernel_poly(self, t_amb):
        return np.array([self.c]), 0.0, 1.0


def _terminal_sei(cell: CellParameters, i_cell: float, t_amb: float, window,
                  l_sei0: float, mode: str, surrogate=None, tol: float = 1e-8):
    """Terminal SEI thickness of a CC charge over the SOC window."""
    mod = ModuleParameters(cells=(cell,), r_mod=1e3, t_amb=t_amb)
    hf = mode == "hf"
    st = [initial_cell_state(cell, window[0], t_amb, l_sei=l_sei0, high_fidelity=hf)]
    dsoc = window[1] - window[0]
    horizon = 3.0 * dsoc * cell.q_nom_ah * 3600.0 / max(abs(i_cell), 1e-6)
    prof = InputProfile.constant(i_cell, np.zeros(1), horizon)
    traj, status, _ = simulate(mod, st, prof, horizon, mode=mode,
                               surrogate=surrogate, tol=tol,
                               soc_targets=[window[1]])
    if status != "target":
        raise CalibrationError(
            f"CC charge at {i_cell:g} A / {t_amb:.2f} K did not reach "
            f"SOC {window[1]:g} within {horizon:.0f}s")
    return float(traj.column("Lsei", 0)[-1]), float(traj.t[-1])


def match_constant_solvent(cell: CellParameters, i_cell: float, t_amb: float,
                           l_target: float, window=(0.2, 0.8),
                           l_sei0: float = 5e-9):
    """Golden-section search for the pinned concentration whose CC charge
    ends at the target SEI thickness.  Returns (c_star, |gap|/l_target)."""

    def l_lf(c):
        l, _ = _terminal_sei(cell, i_cell, t_amb, window, l_sei0, "surrogate",
                             surrogate=_ConstantSolvent(c))
        return l

    lo, hi = 0.0, 2.0 * cell.eps_sei * cell.c_solv_bulk
    f_lo, f_hi = l_lf(lo), l_lf(hi)
    if not (f_lo - 1e-15 <= l_target <= f_hi + 1e-15):
        raise CalibrationError(
            f"terminal thickness {l_target:.6e} m not bracketed by "
            f"constant-solvent runs [{f_lo:.6e}, {f_hi:.6e}] "
            f"at {i_cell:g} A / {t_amb:.2f} K")

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1 = b - invphi * (b - a)
    c2 = a + invphi * (b - a)
    f1 = abs(l_lf(c1) - l_target)
    f2 = abs(l_lf(c2) - l_target)
    while (b - a) > SEARCH_TOL_REL * hi:
        if f1 < f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - invphi * (b - a)
            f1 = abs(l_lf(c1) - l_target)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + invphi * (b - a)
            f2 = abs(l_lf(c2) - l_target)
    c_star = 0.5 * (a + b)
    return c_star, abs(l_lf(c_star) - l_target) / l_target


def calibrate_point(cell: CellParameters, i_cell: float, t_amb: float,
                    window=(0.2, 0.8), l_sei0: float = 5e-9):
    """Constant surface solvent concentration reproducing the full model's
    terminal SEI thickness for a CC charge at (i_cell, t_amb).

    Returns (c_star, relative_residual, l_hf).  The thickness grows
    monotonically with the pinned concentration, so the golden-section search
    over [0, 2*eps_sei*c_solv_bulk] has a unique minimizer.
    """
    l_hf, _ = _terminal_sei(cell, i_cell, t_amb, window, l_sei0, "hf")
    c_star, resid = match_constant_solvent(cell, i_cell, t_amb, l_hf,
                                           window=window, l_sei0=l_sei0)
    if resid > FIT_TOL_REL:
        raise CalibrationError(
            f"calibration residual {resid:.3e} above {FIT_TOL_REL:g} "
            f"at {i_cell:g} A / {t_amb:.2f} K")
    return c_star, resid, l_hf


@dataclass(eq=False)
class SurrogateModel:
    temps: np.ndarray          # (nT,) fitted ambient temperatures [K]
    currents: np.ndarray       # (nI,) training currents [A]
    c_star: np.ndarray         # (nT, nI) calibrated concentrations
    coeffs: np.ndarray         # (nT, DEGREE+1) poly in u, highest power first
    residuals: np.ndarray      # (nT, nI) fit residuals at the training points
    window: tuple              # calibration SOC window
    i_mid: float
    i_half: float

    @property
    def envelope(self):
        return (float(self.currents.min()), float(self.currents.max()),
                float(self.temps.min()), float(self.temps.max()))

    def _poly_desc_at(self, t_amb: float) -> np.ndarray:
        """Coefficients at t_amb: linear interpolation between the bracketing
        fitted temperatures (equivalent to interpolating values)."""
        t = float(t_amb)
        lo, hi, tlo, thi = self.envelope
        if t < tlo or t > thi:
            log.warning("surrogate query T=%.2f K outside fitted range [%.2f, %.2f]; "
                        "clamping", t, tlo, thi)
            t = min(max(t, tlo), thi)
        idx = np.searchsorted(self.temps, t)
        if idx == 0:
            return self.coeffs[0]
        if idx >= self.temps.size:
            return self.coeffs[-1]
        t0, t1 = self.temps[idx - 1], self.temps[idx]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.coeffs[idx - 1] + w * self.coeffs[idx]

    def evaluate(self, i_cell, t_amb: float):
        """Surface solvent concentration at (i_cell, t_amb); clamps to the
        training envelope (with a logged warning) and at zero."""
        coeffs = self._poly_desc_at(t_amb)
        i = np.asarray(i_cell, dtype=float)
        ilo, ihi, _, _ = self.envelope
        if np.any(i < ilo) or np.any(i > ihi):
            log.warning("surrogate query current outside training envelope "
                        "[%.2f, %.2f] A; clamping", ilo, ihi)
            i = np.clip(i, ilo, ihi)
        u = (i - self.i_mid) / self.i_half
        val = np.polyval(coeffs, u)
        if np.any(val < 0.0):
            log.warning("surrogate produced negative concentration; clamping at 0")
            val = np.maximum(val, 0.0)
        return float(val) if np.ndim(i_cell) == 0 else val

    def kernel_poly(self, t_amb: float):
        return self._poly_desc_at(t_amb), self.i_mid, self.i_half

    # -- persistence ----------------------------------------------------------

    def save(self, path):
        def asc_in_i(desc_u):
            # convert the u-polynomial to ascending powers of physical current
            pu = np.polynomial.Polynomial(desc_u[::-1].copy())
            pi = pu(np.polynomial.Polynomial([-self.i_mid / self.i_half,
                                              1.0 / self.i_half]))
            return list(pi.coef)

        payload = {
            "temps_k": list(map(float, self.temps)),
            "currents_a": list(map(float, self.currents)),
            "c_star": self.c_star.tolist(),
            "residuals": self.residuals.tolist(),
            "window": list(self.window),
            "current_scaling": {"mid": self.i_mid, "half": self.i_half},
            "coefficients_u_ascending": [list(c[::-1]) for c in self.coeffs],
            "coefficients_i_ascending": [asc_in_i(c) for c in self.coeffs],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)

    @classmethod
    def load(cls, path) -> "SurrogateModel":
        with open(path) as fh:
            d = json.load(fh)
        coeffs = np.array([c[::-1] for c in d["coefficients_u_ascending"]])
        return cls(temps=np.array(d["temps_k"], dtype=float),
                   currents=np.array(d["currents_a"], dtype=float),
                   c_star=np.array(d["c_star"], dtype=float),
                   coeffs=coeffs,
                   residuals=np.array(d["residuals"], dtype=float),
                   window=tuple(d["window"]),
                   i_mid=float(d["current_scaling"]["mid"]),
                   i_half=float(d["current_scaling"]["half"]))


def fit(samples, window=(0.2, 0.8)) -> SurrogateModel:
    """Fit per-temperature 5th-order polynomials to calibrated points.

    samples: iterable of (i_cell, t_amb, c_star).  With exactly six distinct
    currents per temperature the fit interpolates; with more it is least
    squares.  Duplicate currents at one temperature raise FitError.
    """
    samples = list(samples)
    temps = np.array(sorted({round(t, 9) for _, t, _ in samples}))
    currents = np.array(sorted({round(i, 9) for i, _, _ in samples}))
    if currents.size < DEGREE + 1:
        raise FitError(f"need at least {DEGREE + 1} distinct currents, "
                       f"got {currents.size}")
    i_mid = 0.5 * (currents.min() + currents.max())
    i_half = 0.5 * (currents.max() - currents.min())
    coeffs = np.zeros((temps.size, DEGREE + 1))
    c_star = np.zeros((temps.size, currents.size))
    residuals = np.zeros((temps.size, currents.size))
    for it, t in enumerate(temps):
        rows = [(i, c) for i, tt, c in samples if round(tt, 9) == t]
        if len({round(i, 12) for i, _ in rows}) != len(rows):
            raise FitError(f"duplicated training currents at T={t:.2f} K")
        ii = np.array([r[0] for r in rows])
        cc = np.array([r[1] for r in rows])
        order = np.argsort(ii)
        ii, cc = ii[order], cc[order]
        u = (ii - i_mid) / i_half
        vand = np.vander(u, DEGREE + 1)           # highest power first
        if ii.size == DEGREE + 1:
            coeffs[it] = np.linalg.solve(vand, cc)
        else:
            coeffs[it] = np.linalg.lstsq(vand, cc, rcond=None)[0]
        fitted = vand @ coeffs[it]
        c_star[it, :ii.size] = cc
        residuals[it, :ii.size] = fitted - cc
    return SurrogateModel(temps=temps, currents=currents, c_star=c_star,
                          coeffs=coeffs, residuals=residuals, window=window,
                          i_mid=i_mid, i_half=i_half)


def calibrate_grid(cell: CellParameters, currents, temps, window=(0.2, 0.8),
                   l_sei0: float = 5e-9, jobs: int = 1) -> SurrogateModel:
    """Calibrate every (current, temperature) pair and fit the surrogate."""
    points = [(float(i), float(t)) for t in temps for i in currents]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            stars = list(ex.map(_calib_star, [(cell, i, t, window, l_sei0)
                                              for i, t in points]))
    else:
        stars = [_calib_star((cell, i, t, window, l_sei0)) for i, t in points]
    samples = [(i, t, s) for (i, t), s in zip(points, stars)]
    return fit(samples, window=window)


def _calib_star(args):
    cell, i, t, window, l_sei0 = args
    c_star, _, _ = calibrate_point(cell, i, t, window=window, l_sei0=l_sei0)
    return c_star


def load_default_surrogate() -> SurrogateModel:
    from .params import default_data_dir
    path = default_data_dir() / "surrogate_nmc18650.json"
    if not path.exists():
        raise PackChargeError(
            f"committed surrogate model not found at {path}; run "
            f"'packcharge surrogate fit' or scripts/gen_data.py first")
    return SurrogateModel.load(path)
