"""Backend selection and array packing for the hot kernels.

The numba backend is used when available; setting PACKCHARGE_DISABLE_NUMBA=1
selects the pure-numpy fallback (same source, un-jitted).  `build_pack`
flattens a ModuleParameters into the plain arrays the kernels consume.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .cell import beta_sei, electrode_grid, electrolyte_resistance
from .exceptions import ParameterError
from .pack import StateLayout, layout_for
from .params import ModuleParameters

K = kernels


def backend_name() -> str:
    return "numba" if kernels.USING_NUMBA else "numpy"


@dataclass(frozen=True, eq=False)
class ModulePack:
    """Flattened module parameters for the kernel functions."""
    packf: np.ndarray       # (n_cell, NPCOL)
    oxn: np.ndarray         # anode OCP knots
    ocn: np.ndarray         # anode OCP cubic coefficients (4, n_seg)
    oxp: np.ndarray
    ocp: np.ndarray
    wvol: np.ndarray        # (m,) volume weights
    rmod: float
    tamb: float
    layout: StateLayout
    layout_hf: StateLayout


@lru_cache(maxsize=16)
def build_pack(mod: ModuleParameters) -> ModulePack:
    nc = mod.n_cell
    c0 = mod.cells[0]
    packf = np.zeros((nc, K.NPCOL))
    for k, c in enumerate(mod.cells):
        gn = electrode_grid(c, "n")
        gp = electrode_grid(c, "p")
        if not (np.array_equal(c.neg.ocv.theta, c0.neg.ocv.theta)
                and np.array_equal(c.neg.ocv.volts, c0.neg.ocv.volts)
                and np.array_equal(c.pos.ocv.theta, c0.pos.ocv.theta)
                and np.array_equal(c.pos.ocv.volts, c0.pos.ocv.volts)):
            raise ParameterError("kernel backend requires all cells to share OCP tables")
        p = packf[k]
        p[K.DSN], p[K.EADSN] = c.neg.d_s_ref, c.neg.ea_ds
        p[K.KN], p[K.EAKN] = c.neg.k_ref, c.neg.ea_k
        p[K.RSN], p[K.ASN], p[K.LN], p[K.CMAXN] = c.neg.r_s, c.neg.a_s, c.neg.thickness, c.neg.c_s_max
        p[K.DSP], p[K.EADSP] = c.pos.d_s_ref, c.pos.ea_ds
        p[K.KP], p[K.EAKP] = c.pos.k_ref, c.pos.ea_k
        p[K.RSP], p[K.ASP], p[K.LP], p[K.CMAXP] = c.pos.r_s, c.pos.a_s, c.pos.thickness, c.pos.c_s_max
        p[K.RLUMP] = c.r_contact + electrolyte_resistance(c)
        p[K.KSEI] = c.kappa_sei
        p[K.CC], p[K.CS], p[K.RC], p[K.RU] = c.c_core, c.c_surf, c.r_core, c.r_out
        p[K.MSEI], p[K.RHO], p[K.KF] = c.m_sei, c.rho_sei, c.k_f
        p[K.BETACT], p[K.USOLV], p[K.EPSSEI] = c.beta_ct, c.u_solv, c.eps_sei
        p[K.CBULK], p[K.DSOLV], p[K.EADSOLV] = c.c_solv_bulk, c.d_solv_ref, c.ea_dsolv
        p[K.AREA], p[K.FCONST], p[K.RGAS], p[K.TREFC] = c.area, c.faraday, c.r_gas, c.t_ref
        p[K.CEAVG] = c.c_e_avg
        p[K.BETAN], p[K.BETAP] = gn.beta, gp.beta
        p[K.DRN], p[K.DRP] = gn.dr, gp.dr
        p[K.BETASEI] = beta_sei(c)
        p[K.GAREAN] = c.neg.a_s * c.neg.thickness * c.area
        p[K.BCN], p[K.BCP] = gn.bvec[-1], gp.bvec[-1]
        p[K.TH0N], p[K.TH100N] = c.neg.theta0, c.neg.theta100
        p[K.TH0P], p[K.TH100P] = c.pos.theta0, c.pos.theta100
    gn0 = electrode_grid(c0, "n")
    return ModulePack(
        packf=packf,
        oxn=c0.neg.ocv.theta, ocn=c0.neg.ocv.coeffs,
        oxp=c0.pos.ocv.theta, ocp=c0.pos.ocv.coeffs,
        wvol=gn0.weights, rmod=mod.r_mod, tamb=mod.t_amb,
        layout=layout_for(mod, False), layout_hf=layout_for(mod, True))
