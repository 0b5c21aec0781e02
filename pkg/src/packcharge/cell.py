"""Single-cell electrochemical, thermal and aging dynamics.

All functions are pure and written against the generic math facade in
``dual``, so they evaluate on plain floats, on arrays with leading batch
dimensions, and on forward-mode duals.  Charging current is negative by
convention throughout.

Grid convention: the spherical diffusion PDE is discretized on nodes
r_i = i*dr, i = 1..n_r-1 with dr = R_s/(n_r-1); the stencil coefficient on
the center value vanishes at the first node, so the center is not a state
and each electrode carries n_r - 1 unknowns, the last one on the surface.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import dual as gm
from .exceptions import DomainError
from .params import CellParameters, CellState, ElectrodeParams


def arrhenius(phi_ref, ea, t_core, t_ref, r_gas):
    """Temperature scaling phi_ref * exp[(ea/R)(1/t_ref - 1/t_core)]."""
    tval = np.asarray(gm.value_of(t_core))
    if np.any(tval <= 0.0) or t_ref <= 0.0:
        raise DomainError("arrhenius: temperatures must be positive")
    return phi_ref * gm.exp((ea / r_gas) * (1.0 / t_ref - 1.0 / t_core))


@dataclass(frozen=True, eq=False)
class ElectrodeGrid:
    """Precomputed FDM arrays for one electrode.

    The stencil is stored as integer weights (mat_int) with a per-row 1/i
    factor (row_inv), so that uniform profiles are annihilated exactly in
    floating point; mat_int[i] * row_inv[i] reproduces the usual
    [1 - 1/i, -2, 1 + 1/i] row.
    """
    mat_int: np.ndarray    # (M, M) integer-valued stencil weights
    row_inv: np.ndarray    # (M,) per-row scale 1/i
    bvec: np.ndarray       # (M,) boundary-flux selector, last entry 2 + 2/M
    dr: float
    beta: float            # +-1/(A L F a dr); negative for the anode
    weights: np.ndarray    # (M,) spherical-shell volume weights, sum 1

    @property
    def dense_matrix(self) -> np.ndarray:
        return self.row_inv[:, None] * self.mat_int


def electrode_grid(params: CellParameters, electrode: str) -> ElectrodeGrid:
    el = params.neg if electrode == "n" else params.pos
    sign = -1.0 if electrode == "n" else 1.0
    return _electrode_grid_cached(el, params.area, params.faraday, params.n_r, sign)


@lru_cache(maxsize=64)
def _electrode_grid_cached(el: ElectrodeParams, area: float, faraday: float,
                           n_r: int, sign: float) -> ElectrodeGrid:
    m = n_r - 1
    dr = el.r_s / m
    mat = np.zeros((m, m))
    row_inv = np.empty(m)
    for i in range(1, m + 1):
        row = i - 1
        row_inv[row] = 1.0 / i
        mat[row, row] = -2.0 * i
        if i == 1:
            mat[row, row + 1] = 2.0
        elif i == m:
            mat[row, row - 1] = 2.0 * i
        else:
            mat[row, row - 1] = i - 1.0
            mat[row, row + 1] = i + 1.0
    bvec = np.zeros(m)
    bvec[-1] = 2.0 + 2.0 / m
    beta = sign / (area * el.thickness * faraday * el.a_s * dr)
    r = np.arange(1, m + 1, dtype=float)
    w = r ** 2
    w /= w.sum()
    return ElectrodeGrid(mat_int=mat, row_inv=row_inv, bvec=bvec, dr=dr, beta=beta,
                         weights=w)


def exchange_current_density(params: CellParameters, electrode: str, c_surf, t_core,
                             check: bool = True):
    """Butler-Volmer exchange current density i_0 [A/m^2]."""
    el = params.neg if electrode == "n" else params.pos
    if check:
        cv = np.asarray(gm.value_of(c_surf))
        if np.any(cv <= 0.0) or np.any(cv >= el.c_s_max):
            raise DomainError(f"exchange_current_density: surface concentration outside "
                              f"(0, {el.c_s_max:g})")
    k = arrhenius(el.k_ref, el.ea_k, t_core, params.t_ref, params.r_gas)
    return k * params.faraday * gm.sqrt(params.c_e_avg * c_surf * (el.c_s_max - c_surf))


def overpotential(params: CellParameters, electrode: str, c_surf, t_core, i_cell,
                  check: bool = True):
    """Electrode surface overpotential [V]; sign follows the current."""
    el = params.neg if electrode == "n" else params.pos
    i0 = exchange_current_density(params, electrode, c_surf, t_core, check=check)
    denom = 2.0 * params.area * el.a_s * el.thickness * i0
    return (params.r_gas / (0.5 * params.faraday)) * t_core * gm.asinh(i_cell / denom)


def sei_resistance(params: CellParameters, l_sei, check: bool = True):
    """Ohmic resistance of the anode SEI layer [ohm]."""
    if check and np.any(np.asarray(gm.value_of(l_sei)) <= 0.0):
        raise DomainError("sei_resistance: l_sei must be positive")
    ne = params.neg
    return l_sei / (ne.a_s * params.area * ne.thickness * params.kappa_sei)


def electrolyte_resistance(params: CellParameters) -> float:
    """Lumped electrolyte resistance [ohm] (constant under the SPM assumption)."""
    return (params.neg.thickness / params.kappa_eff_n
            + 2.0 * params.sep_thickness / params.kappa_eff_s
            + params.pos.thickness / params.kappa_eff_p) / (2.0 * params.area)


def open_circuit_voltage(params: CellParameters, theta_n_surf, theta_p_surf):
    return params.pos.ocv(theta_p_surf) - params.neg.ocv(theta_n_surf)


def cell_voltage(params: CellParameters, c_n_surf, c_p_surf, t_core, l_sei, i_cell,
                 check: bool = True):
    """Terminal voltage [V] from surface concentrations, temperature and SEI state."""
    theta_n = c_n_surf / params.neg.c_s_max
    theta_p = c_p_surf / params.pos.c_s_max
    eta_n = overpotential(params, "n", c_n_surf, t_core, i_cell, check=check)
    eta_p = overpotential(params, "p", c_p_surf, t_core, i_cell, check=check)
    r_tot = params.r_contact + electrolyte_resistance(params) + sei_resistance(
        params, l_sei, check=check)
    return (params.pos.ocv(theta_p) + eta_p
            - params.neg.ocv(theta_n) - eta_n
            - i_cell * r_tot)


def cell_voltage_state(params: CellParameters, state: CellState, i_cell: float) -> float:
    return float(cell_voltage(params, state.c_s_n[-1], state.c_s_p[-1],
                              state.t_core, state.l_sei, i_cell))


def soc_bulk(params: CellParameters, electrode: str, c_s):
    """Bulk SOC of one electrode from its radial concentration profile.

    Bulk concentration is the spherical-shell volume-weighted mean of the
    grid values.  The cathode value is the cell SOC (limiting electrode).
    """
    el = params.neg if electrode == "n" else params.pos
    g = electrode_grid(params, electrode)
    c_bulk = gm.dot(g.weights, c_s)
    return (c_bulk / el.c_s_max - el.theta0) / (el.theta100 - el.theta0)


def solid_diffusion_rhs(params: CellParameters, electrode: str, c_s, t_core, i_cell,
                        g_side=0.0):
    """d(c_s)/dt = alpha*A@c + beta*B*(I - g) for one electrode.

    g_side is the side-reaction current drain a_s*L*A*i_s (anode) or 0
    (cathode), in amperes.
    """
    el = params.neg if electrode == "n" else params.pos
    g = electrode_grid(params, electrode)
    d_s = arrhenius(el.d_s_ref, el.ea_ds, t_core, params.t_ref, params.r_gas)
    alpha = d_s / g.dr ** 2
    diffusion = _mul_last_axis(gm.apply_matrix(g.mat_int, c_s), g.row_inv)
    drive = i_cell - g_side
    term1 = _scale_last_axis(diffusion, alpha)
    term2 = _scale_last_axis(_outer_bvec(g.bvec, drive), g.beta)
    return term1 + term2


def _scale_last_axis(vec, scalar):
    """vec (..., m) scaled by scalar (...) with dual support."""
    if isinstance(vec, gm.Dual) or isinstance(scalar, gm.Dual):
        width = vec.width if isinstance(vec, gm.Dual) else scalar.width
        if not isinstance(vec, gm.Dual):
            vec = gm.Dual.constant(vec, width)
        if not isinstance(scalar, gm.Dual):
            scalar = gm.Dual.constant(scalar, width)
        sv = scalar.val[..., None]
        st = scalar.tan[..., None, :]
        return gm.Dual(vec.val * sv, vec.tan * sv[..., None] + vec.val[..., None] * st)
    return vec * np.asarray(scalar)[..., None] if np.ndim(scalar) else vec * scalar


def _outer_bvec(bvec, drive):
    """drive (...) times constant bvec (m,) -> (..., m)."""
    if isinstance(drive, gm.Dual):
        return gm.Dual(drive.val[..., None] * bvec,
                       drive.tan[..., None, :] * bvec[:, None])
    return np.asarray(drive)[..., None] * bvec if np.ndim(drive) else drive * bvec


def side_reaction_current(params: CellParameters, c_n_surf, c_solv_surf, t_core,
                          i_cell, l_sei, check: bool = True):
    """Solvent-reduction side current density i_s [A/m^2]; always <= 0.

    The anode surface potential is taken as U_n(theta_surf) + eta_n, the
    standard closure in SEI-growth models.
    """
    if check and np.any(np.asarray(gm.value_of(c_solv_surf)) < 0.0):
        raise DomainError("side_reaction_current: c_solv_surf must be non-negative")
    ne = params.neg
    theta_n = c_n_surf / ne.c_s_max
    eta_n = overpotential(params, "n", c_n_surf, t_core, i_cell, check=check)
    phi_sn = ne.ocv(theta_n) + eta_n
    r_sei = sei_resistance(params, l_sei, check=check)
    driving = phi_sn - r_sei * i_cell - params.u_solv
    expo = gm.exp((-params.beta_ct * params.faraday / params.r_gas) * (driving / t_core))
    return -2.0 * params.faraday * params.k_f * c_n_surf ** 2 * c_solv_surf * expo


def beta_sei(params: CellParameters) -> float:
    ne = params.neg
    return -params.m_sei / (2.0 * params.faraday * params.rho_sei
                            * ne.a_s * ne.thickness * params.area)


def aging_rhs(params: CellParameters, i_s):
    """(dL_sei/dt [m/s], dQ/dt [A]) from the side-reaction current density.

    dQ/dt = dL/dt / beta_sei = a_s*L*A*i_s holds exactly by construction.
    """
    ne = params.neg
    g_side = (ne.a_s * ne.thickness * params.area) * i_s
    dl_dt = beta_sei(params) * g_side
    return dl_dt, g_side


def thermal_rhs(params: CellParameters, t_core, t_surf, t_amb, i_cell, v_cell, v_oc):
    """Two-state lumped thermal model; module-level coupling is added upstream."""
    dt_core = (i_cell * (v_oc - v_cell) + (t_surf - t_core) / params.r_core) / params.c_core
    dt_surf = ((t_amb - t_surf) / params.r_out
               - (t_surf - t_core) / params.r_core) / params.c_surf
    return dt_core, dt_surf


def solvent_diffusion_rhs(params: CellParameters, c_solv, l_sei, dl_dt, i_s, t_core,
                          check: bool = True):
    """Moving-boundary solvent transport across the SEI film, d(c_solv)/dt.

    Three-case finite-difference form on the normalized coordinate
    xi = (r - R_s,n)/L_sei: reaction-flux boundary at the first node,
    diffusion + boundary-motion convection inside, last node pinned at
    eps_sei * c_solv_bulk (rate identically zero).
    """
    if check and np.any(np.asarray(gm.value_of(l_sei)) <= 0.0):
        raise DomainError("solvent_diffusion_rhs: l_sei must be positive")
    n = params.n_sei
    dxi = 1.0 / (n - 1)
    d_solv = arrhenius(params.d_solv_ref, params.ea_dsolv, t_core,
                       params.t_ref, params.r_gas)
    alpha = d_solv / (l_sei * dxi) ** 2
    beta = 2.0 / (l_sei * dxi) + dl_dt / d_solv

    c1 = gm.take(c_solv, 0, -1)
    c2 = gm.take(c_solv, 1, -1)
    first = 2.0 * alpha * (c2 - c1) + beta * (i_s / params.faraday - dl_dt * c1)

    interior = gm.slice_last(c_solv, 1, -1)
    upper = gm.slice_last(c_solv, 2, None)
    lower = gm.slice_last(c_solv, 0, -2)
    xi = np.arange(1, n - 1, dtype=float) * dxi   # xi at interior nodes 2..n-1
    lap = _scale_last_axis(upper - 2.0 * interior + lower, alpha)
    gamma_base = _scale_last_axis(upper - lower, dl_dt / (2.0 * l_sei * dxi))
    conv = _mul_last_axis(gamma_base, xi - 1.0)

    zeros_shape = first
    first_col = _as_last_axis(first)
    last_col = _as_last_axis(zeros_shape * 0.0)
    return gm.concat([first_col, lap + conv, last_col], axis=-1)


def _as_last_axis(x):
    if isinstance(x, gm.Dual):
        return gm.Dual(x.val[..., None], x.tan[..., None, :])
    return np.asarray(x)[..., None]


def _mul_last_axis(vec, const_lastaxis):
    """vec (..., m) * constant vector (m,)."""
    if isinstance(vec, gm.Dual):
        return gm.Dual(vec.val * const_lastaxis, vec.tan * const_lastaxis[:, None])
    return vec * const_lastaxis


def characteristic_timescales(params: CellParameters):
    """(thermal, electrochemical, aging) characteristic times in seconds."""
    t_ter = params.r_cell ** 2 / params.phi_th
    t_elec = params.neg.r_s ** 2 / params.neg.d_s_ref
    t_ag = params.neg.r_s ** 2 / params.d_solv_ref
    return t_ter, t_elec, t_ag
