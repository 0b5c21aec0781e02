"""Parameter and state containers for cells and series modules.

Parameter sets load from a JSON file with one object per cell; electrode
open-circuit potential curves load from two-column CSVs referenced by the
JSON.  All quantities are SI unless the field name says otherwise (capacity
is carried in Ah, matching the data sheets and the CSV outputs).

Instances are frozen: they are safe to share between threads and across
scenario workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .exceptions import ParameterError
from .ocv import OcvCurve

FARADAY = 96485.33212
R_GAS = 8.314462618
T_REF = 298.0


@dataclass(frozen=True, eq=False)
class ElectrodeParams:
    d_s_ref: float          # solid diffusivity at T_ref [m^2/s]
    ea_ds: float            # activation energy of d_s [J/mol]
    k_ref: float            # reaction rate constant at T_ref [m^2.5/(s mol^0.5)]
    ea_k: float             # activation energy of k [J/mol]
    r_s: float              # particle radius [m]
    a_s: float              # specific interfacial area [1/m]
    thickness: float        # electrode domain thickness [m]
    c_s_max: float          # max solid concentration [mol/m^3]
    theta0: float           # stoichiometry at 0 % SOC
    theta100: float         # stoichiometry at 100 % SOC
    ocv: OcvCurve

    @property
    def theta_window(self):
        lo, hi = sorted((self.theta0, self.theta100))
        return lo, hi


@dataclass(frozen=True, eq=False)
class CellParameters:
    neg: ElectrodeParams
    pos: ElectrodeParams
    sep_thickness: float
    c_e_avg: float
    kappa_eff_n: float
    kappa_eff_s: float
    kappa_eff_p: float
    eps_e_n: float
    eps_e_s: float
    eps_e_p: float
    r_contact: float        # lumped contact resistance [ohm]
    kappa_sei: float        # SEI ionic conductivity [S/m]
    c_core: float           # core heat capacity [J/K]
    c_surf: float           # surface heat capacity [J/K]
    r_core: float           # core-surface conductive resistance [K/W]
    r_out: float            # surface-ambient convective resistance [K/W]
    m_sei: float            # SEI molar mass [kg/mol]
    rho_sei: float          # SEI density [kg/m^3]
    k_f: float              # solvent reduction rate constant
    beta_ct: float          # side-reaction charge-transfer coefficient
    u_solv: float           # solvent reduction potential [V]
    eps_sei: float          # SEI porosity
    c_solv_bulk: float      # bulk solvent concentration [mol/m^3]
    d_solv_ref: float       # solvent diffusivity at T_ref [m^2/s]
    ea_dsolv: float
    area: float             # cell cross-sectional area [m^2]
    r_cell: float           # cell can radius [m]
    phi_th: float           # thermal diffusivity [m^2/s]
    n_r: int                # radial grid points per electrode (incl. center)
    n_sei: int              # SEI layer grid points
    q_nom_ah: float
    faraday: float = FARADAY
    r_gas: float = R_GAS
    t_ref: float = T_REF

    @property
    def n_radial_states(self) -> int:
        """Radial state nodes per electrode.

        The FDM stencil at the node nearest the center has a zero coefficient
        on the center value, so r = 0 carries no state and the grid holds
        n_r - 1 unknowns at r = i*dr, i = 1..n_r-1, with the last node on the
        particle surface.  This is what makes a 2-cell module with n_r = 10
        come out at 44 states.
        """
        return self.n_r - 1

    def validate(self):
        ne, po = self.neg, self.pos
        if not (0.0 <= ne.theta0 < ne.theta100 <= 1.0):
            raise ParameterError("anode stoichiometry window must satisfy 0 <= theta0 < theta100 <= 1")
        # The cathode window is stored in its physical orientation: stoichiometry
        # at 0 % SOC exceeds that at 100 % SOC (de-intercalation during charge).
        if not (0.0 <= po.theta100 < po.theta0 <= 1.0):
            raise ParameterError("cathode stoichiometry window must satisfy 0 <= theta100 < theta0 <= 1")
        for el, tag in ((ne, "neg"), (po, "pos")):
            lo, hi = el.theta_window
            dlo, dhi = el.ocv.domain
            if dlo > lo or dhi < hi:
                raise ParameterError(f"{tag}: OCV table domain [{dlo}, {dhi}] does not cover "
                                     f"stoichiometry window [{lo}, {hi}]")
            for name in ("d_s_ref", "k_ref", "r_s", "a_s", "thickness", "c_s_max"):
                if getattr(el, name) <= 0:
                    raise ParameterError(f"{tag}.{name} must be positive")
        for name in ("sep_thickness", "c_e_avg", "kappa_eff_n", "kappa_eff_s", "kappa_eff_p",
                     "kappa_sei", "c_core", "c_surf", "r_core", "r_out", "m_sei", "rho_sei",
                     "k_f", "beta_ct", "c_solv_bulk", "d_solv_ref", "area", "r_cell",
                     "phi_th", "q_nom_ah", "faraday", "r_gas", "t_ref"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        for name in ("eps_e_n", "eps_e_s", "eps_e_p", "eps_sei"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ParameterError(f"{name} must lie in (0, 1]")
        if self.r_contact < 0:
            raise ParameterError("r_contact must be non-negative")
        if self.n_r < 3 or self.n_sei < 3:
            raise ParameterError("need at least 3 grid points per discretized dimension")
        return self


@dataclass(frozen=True, eq=False)
class ModuleParameters:
    cells: tuple                # tuple of CellParameters, one per series cell
    r_mod: float                # cell-to-cell heat transfer resistance [K/W]
    t_amb: float                # ambient temperature [K]

    @property
    def n_cell(self) -> int:
        return len(self.cells)

    def validate(self):
        if self.n_cell < 1:
            raise ParameterError("module needs at least one cell")
        if self.r_mod <= 0:
            raise ParameterError("r_mod must be positive")
        if self.t_amb <= 0:
            raise ParameterError("t_amb must be positive")
        nr = {c.n_r for c in self.cells}
        if len(nr) != 1:
            raise ParameterError("all cells must share n_r (common state layout)")
        for c in self.cells:
            c.validate()
        return self

    def with_ambient(self, t_amb: float) -> "ModuleParameters":
        return replace(self, t_amb=t_amb)


@dataclass(frozen=True, eq=False)
class CellState:
    c_s_n: np.ndarray          # (n_r - 1,) [mol/m^3]
    c_s_p: np.ndarray          # (n_r - 1,) [mol/m^3]
    t_core: float              # [K]
    t_surf: float              # [K]
    l_sei: float               # [m]
    q_ah: float                # remaining capacity [Ah]
    c_solv: np.ndarray | None = None   # (n_sei,), present in high-fidelity mode


def uniform_concentration(el: ElectrodeParams, soc: float) -> float:
    """Solid concentration of a rested electrode at the given cell SOC."""
    return (el.theta0 + soc * (el.theta100 - el.theta0)) * el.c_s_max


def initial_cell_state(params: CellParameters, soc: float, t_amb: float,
                       l_sei: float = 5e-9, q_ah: float | None = None,
                       high_fidelity: bool = False) -> CellState:
    """Rested (uniform-profile) cell state at a given SOC and temperature."""
    m = params.n_radial_states
    cn = np.full(m, uniform_concentration(params.neg, soc))
    cp = np.full(m, uniform_concentration(params.pos, soc))
    csolv = None
    if high_fidelity:
        csolv = np.full(params.n_sei, params.eps_sei * params.c_solv_bulk)
    return CellState(cn, cp, t_amb, t_amb, l_sei,
                     params.q_nom_ah if q_ah is None else q_ah, csolv)


# -- JSON / CSV loading -------------------------------------------------------

def _electrode_from_dict(d: dict, base: Path, tag: str) -> ElectrodeParams:
    ocv = OcvCurve.from_csv(base / d["ocv_csv"], name=f"{tag}-ocv")
    return ElectrodeParams(
        d_s_ref=float(d["d_s_ref"]), ea_ds=float(d["ea_ds"]),
        k_ref=float(d["k_ref"]), ea_k=float(d["ea_k"]),
        r_s=float(d["r_s"]), a_s=float(d["a_s"]),
        thickness=float(d["thickness"]), c_s_max=float(d["c_s_max"]),
        theta0=float(d["theta0"]), theta100=float(d["theta100"]), ocv=ocv)


def cell_from_dict(d: dict, base: Path) -> CellParameters:
    el = d["electrodes"]
    ely = d["electrolyte"]
    th = d["thermal"]
    ag = d["aging"]
    geo = d["geometry"]
    disc = d["discretization"]
    cons = d.get("constants", {})
    return CellParameters(
        neg=_electrode_from_dict(el["neg"], base, "neg"),
        pos=_electrode_from_dict(el["pos"], base, "pos"),
        sep_thickness=float(d["separator"]["thickness"]),
        c_e_avg=float(ely["c_e_avg"]),
        kappa_eff_n=float(ely["kappa_eff"]["neg"]),
        kappa_eff_s=float(ely["kappa_eff"]["sep"]),
        kappa_eff_p=float(ely["kappa_eff"]["pos"]),
        eps_e_n=float(ely["porosity"]["neg"]),
        eps_e_s=float(ely["porosity"]["sep"]),
        eps_e_p=float(ely["porosity"]["pos"]),
        r_contact=float(d["resistances"]["r_contact"]),
        kappa_sei=float(d["resistances"]["kappa_sei"]),
        c_core=float(th["c_core"]), c_surf=float(th["c_surf"]),
        r_core=float(th["r_core"]), r_out=float(th["r_out"]),
        m_sei=float(ag["m_sei"]), rho_sei=float(ag["rho_sei"]),
        k_f=float(ag["k_f"]), beta_ct=float(ag["beta_ct"]),
        u_solv=float(ag["u_solv"]), eps_sei=float(ag["eps_sei"]),
        c_solv_bulk=float(ag["c_solv_bulk"]),
        d_solv_ref=float(ag["d_solv_ref"]), ea_dsolv=float(ag["ea_dsolv"]),
        area=float(geo["area"]), r_cell=float(geo["r_cell"]),
        phi_th=float(geo["phi_th"]),
        n_r=int(disc["n_r"]), n_sei=int(disc["n_sei"]),
        q_nom_ah=float(d["capacity"]["q_nom_ah"]),
        faraday=float(cons.get("faraday", FARADAY)),
        r_gas=float(cons.get("r_gas", R_GAS)),
        t_ref=float(cons.get("t_ref", T_REF)),
    ).validate()


def load_module(path) -> ModuleParameters:
    """Load module parameters from JSON (cell list or single cell + count)."""
    path = Path(path)
    with open(path) as fh:
        d = json.load(fh)
    base = path.parent
    if "cells" in d:
        cells = tuple(cell_from_dict(c, base) for c in d["cells"])
    else:
        cells = tuple(cell_from_dict(d["cell"], base) for _ in range(int(d.get("n_cell", 1))))
    return ModuleParameters(cells=cells, r_mod=float(d["r_mod"]),
                            t_amb=float(d["t_amb"])).validate()


def default_data_dir() -> Path:
    return Path(__file__).parent / "data"


def load_default_module(n_cell: int = 2, t_amb: float = 298.15) -> ModuleParameters:
    """The representative NMC/graphite 18650 module committed with the package."""
    path = default_data_dir() / "module_nmc18650.json"
    mod = load_module(path)
    if n_cell != mod.n_cell:
        mod = replace(mod, cells=tuple(mod.cells[0] for _ in range(n_cell)))
    return replace(mod, t_amb=t_amb).validate()
