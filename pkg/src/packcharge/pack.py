"""Series-module assembly: state packing and the coupled right-hand side.

The flat state vector stacks, in order: anode concentrations for all cells,
cathode concentrations for all cells, interleaved (T_core, T_surf) pairs,
SEI thicknesses, capacities [Ah], and (high-fidelity mode only) the solvent
concentration grids.  With n_r radial points per electrode this gives
n_cell * (4 + 2*(n_r - 1)) states in surrogate mode.

Adjacent cells exchange heat through r_mod between their surface nodes; end
cells have a single neighbor.  Heat flows toward the cooler cell, i.e. the
coupling enters as +(T_s,k+-1 - T_s,k)/r_mod.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cell as cm
from . import dual as gm
from .exceptions import SimulationValidityError
from .params import CellParameters, CellState, ModuleParameters

VALIDITY_MARGIN = 1e-6   # fraction of c_s_max kept away from both bounds


@dataclass(frozen=True, eq=False)
class ModuleInput:
    """Module current and per-cell balancing currents (charging negative)."""
    i_module: float
    i_balance: np.ndarray

    @property
    def i_cell(self) -> np.ndarray:
        return self.i_module - np.asarray(self.i_balance, dtype=float)


@dataclass(frozen=True, eq=False)
class StateLayout:
    n_cell: int
    m: int                  # radial states per electrode (n_r - 1)
    n_sei: int
    high_fidelity: bool

    @property
    def n_states(self) -> int:
        n = self.n_cell * (2 * self.m + 4)
        if self.high_fidelity:
            n += self.n_cell * self.n_sei
        return n

    @property
    def cn_end(self):
        return self.n_cell * self.m

    @property
    def cp_end(self):
        return 2 * self.n_cell * self.m

    @property
    def t_end(self):
        return self.cp_end + 2 * self.n_cell

    @property
    def l_end(self):
        return self.t_end + self.n_cell

    @property
    def q_end(self):
        return self.l_end + self.n_cell

    def split(self, y):
        """Slice a flat (batched) state into named blocks."""
        nc, m = self.n_cell, self.m
        cn = _resh(gm.slice_last(y, 0, self.cn_end), (nc, m))
        cp = _resh(gm.slice_last(y, self.cn_end, self.cp_end), (nc, m))
        temps = _resh(gm.slice_last(y, self.cp_end, self.t_end), (nc, 2))
        lsei = gm.slice_last(y, self.t_end, self.l_end)
        q = gm.slice_last(y, self.l_end, self.q_end)
        csolv = None
        if self.high_fidelity:
            csolv = _resh(gm.slice_last(y, self.q_end, self.q_end + nc * self.n_sei),
                          (nc, self.n_sei))
        return cn, cp, temps, lsei, q, csolv


def _resh(x, tail):
    lead = x.shape[:-1] if not isinstance(x, gm.Dual) else x.val.shape[:-1]
    return x.reshape(lead + tail)


def layout_for(mod: ModuleParameters, high_fidelity: bool) -> StateLayout:
    c0 = mod.cells[0]
    return StateLayout(mod.n_cell, c0.n_radial_states, c0.n_sei, high_fidelity)


def state_scales(mod: ModuleParameters, layout: StateLayout) -> np.ndarray:
    """Per-state magnitude scales used by both the integrator error norm and
    the transcription (concentrations ~ c_s_max, temperatures ~ 20 K around
    ambient, SEI thickness ~ 1 nm, capacity ~ Q_nom)."""
    nc, m = layout.n_cell, layout.m
    s = np.empty(layout.n_states)
    for k, c in enumerate(mod.cells):
        s[k * m:(k + 1) * m] = c.neg.c_s_max
        s[layout.cn_end + k * m:layout.cn_end + (k + 1) * m] = c.pos.c_s_max
        s[layout.cp_end + 2 * k:layout.cp_end + 2 * k + 2] = 20.0
        s[layout.t_end + k] = 1e-9
        s[layout.l_end + k] = c.q_nom_ah
        if layout.high_fidelity:
            off = layout.q_end + k * layout.n_sei
            s[off:off + layout.n_sei] = c.eps_sei * c.c_solv_bulk
    return s


def state_offsets(mod: ModuleParameters, layout: StateLayout) -> np.ndarray:
    """Reference offsets paired with state_scales (temperatures sit near
    ambient; every other state is scaled about zero)."""
    off = np.zeros(layout.n_states)
    off[layout.cp_end:layout.t_end] = mod.t_amb
    return off


def pack_states(states, layout: StateLayout) -> np.ndarray:
    """Flatten a sequence of CellState into the module state vector."""
    nc, m = layout.n_cell, layout.m
    y = np.empty(layout.n_states)
    for k, st in enumerate(states):
        y[k * m:(k + 1) * m] = st.c_s_n
        y[layout.cn_end + k * m:layout.cn_end + (k + 1) * m] = st.c_s_p
        y[layout.cp_end + 2 * k] = st.t_core
        y[layout.cp_end + 2 * k + 1] = st.t_surf
        y[layout.t_end + k] = st.l_sei
        y[layout.l_end + k] = st.q_ah
        if layout.high_fidelity:
            if st.c_solv is None:
                raise ValueError("high-fidelity layout needs c_solv in every cell state")
            off = layout.q_end + k * layout.n_sei
            y[off:off + layout.n_sei] = st.c_solv
    return y


def unpack_states(y: np.ndarray, layout: StateLayout):
    """Inverse of pack_states for a single (unbatched) state vector."""
    cn, cp, temps, lsei, q, csolv = layout.split(np.asarray(y, dtype=float))
    out = []
    for k in range(layout.n_cell):
        out.append(CellState(
            c_s_n=cn[k].copy(), c_s_p=cp[k].copy(),
            t_core=float(temps[k, 0]), t_surf=float(temps[k, 1]),
            l_sei=float(lsei[k]), q_ah=float(q[k]),
            c_solv=csolv[k].copy() if csolv is not None else None))
    return out


def check_validity(y: np.ndarray, mod: ModuleParameters, layout: StateLayout,
                   t: float | None = None):
    """Raise SimulationValidityError if the state left the physical domain."""
    cn, cp, temps, lsei, q, csolv = layout.split(np.asarray(y, dtype=float))
    for k, c in enumerate(mod.cells):
        for tag, arr, cmax in (("anode", cn[k], c.neg.c_s_max),
                               ("cathode", cp[k], c.pos.c_s_max)):
            lo, hi = VALIDITY_MARGIN * cmax, (1.0 - VALIDITY_MARGIN) * cmax
            if np.any(arr <= lo) or np.any(arr >= hi):
                raise SimulationValidityError(
                    f"{tag} concentration left (0, c_s_max) validity band", t=t, cell=k)
        if np.any(temps[k] <= 0.0):
            raise SimulationValidityError("non-positive temperature", t=t, cell=k)
        if lsei[k] <= 0.0:
            raise SimulationValidityError("non-positive SEI thickness", t=t, cell=k)
        if q[k] <= 0.0:
            raise SimulationValidityError("non-positive capacity", t=t, cell=k)
        if csolv is not None and np.any(csolv[k] < 0.0):
            raise SimulationValidityError("negative solvent concentration", t=t, cell=k)


def module_rhs_flat(mod: ModuleParameters, layout: StateLayout, y, i_cell,
                    csolv_surf=None, t_amb: float | None = None, check: bool = False):
    """Time derivative of the flat module state (generic over scalar type).

    i_cell: per-cell currents, shape (..., n_cell); charging negative.
    csolv_surf: per-cell surface solvent concentration (..., n_cell); required
    in surrogate mode, ignored in high-fidelity mode (taken from the state).
    Returns (dy/dt, v_cell) with v_cell of shape (..., n_cell).
    """
    t_amb = mod.t_amb if t_amb is None else t_amb
    cn, cp, temps, lsei, q, csolv = layout.split(y)

    dcn, dcp, dtemp, dl, dq, dsolv, vcells = [], [], [], [], [], [], []
    nc = layout.n_cell
    for k, c in enumerate(mod.cells):
        cn_k = gm.take(cn, k, -2)
        cp_k = gm.take(cp, k, -2)
        t_k = gm.take(temps, k, -2)
        tc_k = gm.take(t_k, 0, -1)
        ts_k = gm.take(t_k, 1, -1)
        l_k = gm.take(lsei, k, -1)
        i_k = gm.take(i_cell, k, -1)
        cns = gm.take(cn_k, layout.m - 1, -1)
        cps = gm.take(cp_k, layout.m - 1, -1)

        if layout.high_fidelity:
            cs_k = gm.take(gm.take(csolv, k, -2), 0, -1)
        else:
            cs_k = gm.take(csolv_surf, k, -1)

        i_s = cm.side_reaction_current(c, cns, cs_k, tc_k, i_k, l_k, check=check)
        dl_k, g_side = cm.aging_rhs(c, i_s)

        dcn.append(cm.solid_diffusion_rhs(c, "n", cn_k, tc_k, i_k, g_side))
        dcp.append(cm.solid_diffusion_rhs(c, "p", cp_k, tc_k, i_k, 0.0))

        v_k = cm.cell_voltage(c, cns, cps, tc_k, l_k, i_k, check=check)
        v_oc = cm.open_circuit_voltage(c, cns / c.neg.c_s_max, cps / c.pos.c_s_max)
        dtc, dts = cm.thermal_rhs(c, tc_k, ts_k, t_amb, i_k, v_k, v_oc)
        # nearest-neighbor surface coupling; heat flows into the cooler cell
        if nc > 1:
            ts_all = gm.take(temps, 1, -1)
            if k > 0:
                dts = dts + (gm.take(ts_all, k - 1, -1) - ts_k) / (mod.r_mod * c.c_surf)
            if k < nc - 1:
                dts = dts + (gm.take(ts_all, k + 1, -1) - ts_k) / (mod.r_mod * c.c_surf)

        dtemp.append(gm.stack([dtc, dts], axis=-1))
        dl.append(dl_k)
        dq.append(g_side / 3600.0)   # capacity state is carried in Ah
        vcells.append(v_k)

        if layout.high_fidelity:
            csolv_k = gm.take(csolv, k, -2)
            dsolv.append(cm.solvent_diffusion_rhs(c, csolv_k, l_k, dl_k, i_s, tc_k,
                                                  check=check))

    parts = [gm.concat(dcn, axis=-1), gm.concat(dcp, axis=-1),
             gm.concat(dtemp, axis=-1),
             gm.stack(dl, axis=-1), gm.stack(dq, axis=-1)]
    if layout.high_fidelity:
        parts.append(gm.concat(dsolv, axis=-1))
    dy = gm.concat(parts, axis=-1)
    v_cell = gm.stack(vcells, axis=-1)
    return dy, v_cell


def module_rhs(mod: ModuleParameters, states, u: ModuleInput, mode: str = "surrogate",
               surrogate_eval=None, check: bool = True):
    """Structured module RHS: list of CellState -> list of per-cell rate dicts.

    mode 'high-fidelity' expects c_solv in the states; mode 'surrogate' needs
    surrogate_eval(i_cell_vector) -> per-cell surface solvent concentrations.
    """
    hf = mode in ("hf", "high-fidelity")
    layout = layout_for(mod, hf)
    y = pack_states(states, layout)
    if check:
        check_validity(y, mod, layout)
    i_cell = np.asarray(u.i_cell, dtype=float)
    csurf = None
    if not hf:
        if surrogate_eval is None:
            raise ValueError("surrogate mode needs surrogate_eval")
        csurf = np.asarray(surrogate_eval(i_cell), dtype=float)
    dy, v = module_rhs_flat(mod, layout, y, i_cell, csurf, check=check)
    return dy, v
