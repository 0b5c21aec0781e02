"""Declarative charging-problem definition: schemes, weights, bounds,
cost decomposition and the constraint catalogue, independent of any
discretization.

Two schemes: 'sct' charges every cell for the same duration (one final-time
variable); 'dct' gives each cell its own final time and bypasses finished
cells.  Charging currents are negative throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ParameterError
from .params import ModuleParameters

SCT, DCT = "sct", "dct"


@dataclass(frozen=True, eq=False)
class OperatingBounds:
    i_b_min: float = -6.0
    i_b_max: float = 0.0
    i0_min: float = -16.0
    i0_max: float = -12.0
    v_min: float = 2.5
    v_max: float = 4.2
    t_min: float = 273.15 + 5.0
    t_max: float = 273.15 + 45.0
    t_f_max: float = 2000.0

    def validate(self):
        for lo, hi, name in ((self.i_b_min, self.i_b_max, "i_b"),
                             (self.i0_min, self.i0_max, "i0"),
                             (self.v_min, self.v_max, "v"),
                             (self.t_min, self.t_max, "t")):
            if lo >= hi:
                raise ParameterError(f"empty bound interval for {name}")
        if self.t_f_max <= 0:
            raise ParameterError("t_f_max must be positive")
        return self

    @property
    def i_cell_min(self) -> float:
        """Most negative reachable cell current: I0_min - IB_max."""
        return self.i0_min - self.i_b_max

    @property
    def i_cell_max(self) -> float:
        """Least negative reachable cell current: I0_max - IB_min."""
        return self.i0_max - self.i_b_min


@dataclass(frozen=True, eq=False)
class Weights:
    """Trade-off weights: J = alpha*beta1*h + (1-alpha)*(beta2*g1 + beta3*g2)."""
    alpha: float = 0.5
    beta1: float = 1.0        # [1/s], charging-time weight
    beta2: float = 5e8        # [s/m], terminal-thickness weight
    beta3: float = 5e8        # [s/m], growth-rate weight

    def validate(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ParameterError("alpha must lie in [0, 1]")
        if min(self.beta1, self.beta2, self.beta3) <= 0:
            raise ParameterError("beta weights must be positive")
        return self


@dataclass(frozen=True, eq=False)
class ChargingProblem:
    scheme: str = DCT
    weights: Weights = field(default_factory=Weights)
    bounds: OperatingBounds = field(default_factory=OperatingBounds)
    soc_initial: tuple = (0.2, 0.4)
    soc_target: float = 0.8
    l_sei_initial: tuple = (5e-9, 5e-9)
    q_initial_ah: tuple | None = None   # None: nominal capacity per cell
    t_initial: tuple | None = None      # None: ambient
    layout: str = "with-i0"             # or "cell-current" (alternate formulation)

    @property
    def n_cell(self) -> int:
        return len(self.soc_initial)

    def validate(self):
        if self.scheme not in (SCT, DCT):
            raise ParameterError(f"unknown scheme {self.scheme!r}")
        if self.layout not in ("with-i0", "cell-current"):
            raise ParameterError(f"unknown variable layout {self.layout!r}")
        self.weights.validate()
        self.bounds.validate()
        if len(self.l_sei_initial) != self.n_cell:
            raise ParameterError("per-cell initial lists must have equal length")
        if not all(s < self.soc_target <= 1.0 for s in self.soc_initial):
            raise ParameterError("need soc_initial < soc_target <= 1 per cell")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "ChargingProblem":
        w = d.get("weights", {})
        b = d.get("bounds", {})
        kw = {}
        for name in ("scheme", "soc_initial", "soc_target", "l_sei_initial",
                     "q_initial_ah", "t_initial", "layout"):
            if name in d:
                v = d[name]
                kw[name] = tuple(v) if isinstance(v, list) else v
        return cls(weights=Weights(**w), bounds=OperatingBounds(**b), **kw).validate()

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "weights": {"alpha": self.weights.alpha, "beta1": self.weights.beta1,
                        "beta2": self.weights.beta2, "beta3": self.weights.beta3},
            "bounds": {k: getattr(self.bounds, k) for k in
                       ("i_b_min", "i_b_max", "i0_min", "i0_max", "v_min", "v_max",
                        "t_min", "t_max", "t_f_max")},
            "soc_initial": list(self.soc_initial),
            "soc_target": self.soc_target,
            "l_sei_initial": list(self.l_sei_initial),
            "q_initial_ah": None if self.q_initial_ah is None else list(self.q_initial_ah),
            "t_initial": None if self.t_initial is None else list(self.t_initial),
            "layout": self.layout,
        }


@dataclass(frozen=True, eq=False)
class CostBreakdown:
    h: float      # mean charging time [s]
    g1: float     # mean terminal SEI thickness [m]
    g2: float     # mean SEI growth rate over each cell's charge [m/s]
    j: float

    def recompose(self, w: Weights) -> float:
        return w.alpha * w.beta1 * self.h + (1.0 - w.alpha) * (
            w.beta2 * self.g1 + w.beta3 * self.g2)


def cost(problem: ChargingProblem, t_f, l_end, l_start) -> CostBreakdown:
    """Composite objective from per-cell terminal data.

    t_f, l_end, l_start: per-cell arrays.  h is the mean charging time (a
    single shared value under SCT, so the mean reduces to t_f itself); g2 is
    each cell's time-averaged growth rate (L_end - L_0)/t_f, averaged over
    cells.
    """
    t_f = np.asarray(t_f, dtype=float)
    l_end = np.asarray(l_end, dtype=float)
    l_start = np.asarray(l_start, dtype=float)
    if problem.scheme == SCT and not np.allclose(t_f, t_f[0], rtol=1e-9, atol=1e-9):
        raise ParameterError("SCT summary must carry one shared charging time")
    h = float(np.mean(t_f))
    g1 = float(np.mean(l_end))
    g2 = float(np.mean((l_end - l_start) / t_f))
    w = problem.weights
    j = w.alpha * w.beta1 * h + (1.0 - w.alpha) * (w.beta2 * g1 + w.beta3 * g2)
    return CostBreakdown(h=h, g1=g1, g2=g2, j=j)


@dataclass(frozen=True, eq=False)
class ConstraintSpec:
    kind: str                 # see constraint_set
    cell: int | None          # None: module-level
    lower: float
    upper: float
    time_domain: str          # "path" (on [0, t_f_cell]), "initial", "terminal"
    note: str = ""


def constraint_set(problem: ChargingProblem, mod: ModuleParameters):
    """Catalogue of box/path/terminal constraints for the scheme.

    Path constraints of cell k live on [0, t_f_k] (bypassed cells only relax
    their input box, never the safety bounds).  DCT has one final-time box and
    one terminal SOC equality per cell; SCT shares a single final time.
    """
    b = problem.bounds
    out = [ConstraintSpec("box-module-current", None, b.i0_min, b.i0_max, "path")]
    nc = problem.n_cell
    for k in range(nc):
        out.append(ConstraintSpec("box-balancing-current", k, b.i_b_min, b.i_b_max,
                                  "path"))
        out.append(ConstraintSpec("path-voltage", k, b.v_min, b.v_max, "path"))
        out.append(ConstraintSpec("path-core-temperature", k, b.t_min, b.t_max,
                                  "path"))
        out.append(ConstraintSpec("path-surface-temperature", k, b.t_min, b.t_max,
                                  "path"))
        for el_tag, el in (("anode", mod.cells[k].neg), ("cathode", mod.cells[k].pos)):
            lo, hi = el.theta_window
            out.append(ConstraintSpec(f"path-stoichiometry-{el_tag}", k,
                                      lo * el.c_s_max, hi * el.c_s_max, "path"))
        out.append(ConstraintSpec("initial-state", k, np.nan, np.nan, "initial",
                                  note="L_sei, Q, T, SOC pinned at t=0"))
        out.append(ConstraintSpec("terminal-soc", k, problem.soc_target,
                                  problem.soc_target, "terminal"))
    if problem.scheme == DCT:
        for k in range(nc):
            out.append(ConstraintSpec("box-final-time", k, 0.0, b.t_f_max, "path"))
    else:
        out.append(ConstraintSpec("box-final-time", None, 0.0, b.t_f_max, "path"))
    return out


def n_time_variables(problem: ChargingProblem) -> int:
    return problem.n_cell if problem.scheme == DCT else 1


def n_opt_variables(problem: ChargingProblem, n_states: int) -> int:
    """Count of continuous-time optimization variables (states, currents,
    final times): N_s + 2*N_cell + 1 under DCT, N_s + N_cell + 2 under SCT."""
    nc = problem.n_cell
    if problem.layout == "cell-current":
        return n_states + nc + n_time_variables(problem)
    return n_states + nc + 1 + n_time_variables(problem)


def to_cell_current_layout(problem: ChargingProblem) -> ChargingProblem:
    """Alternate formulation: replace (I_0, I_B) with per-cell currents.

    The induced cell-current box is [i0_min - i_b_max, i0_max - i_b_min].
    Reconstruction: I_0 = min_k I_cell_k and I_B_k = I_0 - I_cell_k, which
    satisfies the defining identity and yields componentwise I_B <= 0.
    """
    if problem.layout == "cell-current":
        raise ParameterError("layout is already cell-current")
    return replace(problem, layout="cell-current")


def reconstruct_module_split(i_cell: np.ndarray):
    """(I_0, I_B) from per-cell currents under the cell-current layout."""
    i_cell = np.asarray(i_cell, dtype=float)
    i0 = i_cell.min(axis=-1)
    i_b = np.expand_dims(i0, -1) - i_cell
    return i0, i_b
