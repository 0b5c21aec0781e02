"""Regenerate the committed data files: electrode OCP tables and the
representative NMC/graphite 18650 module parameter set.

Run from the repo root:  python3 scripts/gen_data.py
"""

import json
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

DATA = Path(__file__).resolve().parents[1] / "src" / "packcharge" / "data"

# Anchor points tracing the usual graphite staircase (potential vs Li/Li+).
GRAPHITE = [
    (0.000, 1.170), (0.005, 0.952), (0.010, 0.840), (0.020, 0.700),
    (0.035, 0.530), (0.050, 0.400), (0.070, 0.300), (0.090, 0.248),
    (0.110, 0.222), (0.140, 0.200), (0.170, 0.182), (0.200, 0.160),
    (0.240, 0.145), (0.280, 0.136), (0.330, 0.130), (0.400, 0.124),
    (0.470, 0.118), (0.520, 0.112), (0.565, 0.102), (0.600, 0.094),
    (0.650, 0.0885), (0.700, 0.0855), (0.750, 0.0835), (0.800, 0.0815),
    (0.850, 0.0795), (0.900, 0.0775), (0.950, 0.0750), (0.980, 0.0715),
    (1.000, 0.0650),
]

# NMC-style cathode: smooth decreasing potential over the cycled window.
NMC = [
    (0.300, 4.360), (0.340, 4.300), (0.380, 4.235), (0.420, 4.170),
    (0.460, 4.105), (0.500, 4.040), (0.540, 3.985), (0.580, 3.935),
    (0.620, 3.890), (0.660, 3.850), (0.700, 3.810), (0.740, 3.772),
    (0.780, 3.730), (0.820, 3.680), (0.860, 3.625), (0.900, 3.565),
    (0.940, 3.500), (0.970, 3.430), (1.000, 3.340),
]


def write_table(anchors, path, n=121):
    x, u = np.array(anchors).T
    assert np.all(np.diff(x) > 0)
    assert np.all(np.diff(u) < 0), "OCP anchors must be strictly decreasing"
    p = PchipInterpolator(x, u)
    xs = np.linspace(x[0], x[-1], n)
    us = p(xs)
    assert np.all(np.diff(us) < 0)
    with open(path, "w") as fh:
        fh.write("# stoichiometry, open-circuit potential [V]\n")
        for a, b in zip(xs, us):
            fh.write(f"{a:.6f},{b:.6f}\n")
    print("wrote", path)


def electrode_area_density(q_coulomb, r_s, thickness, area, c_s_max, dtheta, faraday=96485.33212):
    """Specific interfacial area that makes the stoichiometric window hold
    exactly q_coulomb of charge: a_s = 3 Q / (R L A c_max dtheta F)."""
    return 3.0 * q_coulomb / (r_s * thickness * area * c_s_max * dtheta * faraday)


def build_cell():
    q_c = 2.0 * 3600.0
    a_n = electrode_area_density(q_c, 6e-6, 70e-6, 0.1, 31080.0, 0.85 - 0.03)
    a_p = electrode_area_density(q_c, 5e-6, 65e-6, 0.1, 51830.0, 0.94 - 0.36)
    return {
        "electrodes": {
            "neg": {
                "d_s_ref": 3.0e-14, "ea_ds": 8.0e3,
                "k_ref": 1.5e-11, "ea_k": 2.0e3,
                "r_s": 6.0e-6, "a_s": round(a_n, 1),
                "thickness": 70.0e-6, "c_s_max": 31080.0,
                "theta0": 0.03, "theta100": 0.85,
                "ocv_csv": "ocv_graphite.csv",
            },
            "pos": {
                "d_s_ref": 1.0e-13, "ea_ds": 8.0e3,
                "k_ref": 4.0e-11, "ea_k": 2.0e3,
                "r_s": 5.0e-6, "a_s": round(a_p, 1),
                "thickness": 65.0e-6, "c_s_max": 51830.0,
                "theta0": 0.94, "theta100": 0.36,
                "ocv_csv": "ocv_nmc.csv",
            },
        },
        "separator": {"thickness": 2.5e-5},
        "electrolyte": {
            "c_e_avg": 1200.0,
            "kappa_eff": {"neg": 0.30, "sep": 0.50, "pos": 0.30},
            "porosity": {"neg": 0.30, "sep": 0.45, "pos": 0.30},
        },
        "resistances": {"r_contact": 0.010, "kappa_sei": 5.0e-6},
        "thermal": {"c_core": 35.0, "c_surf": 28.0, "r_core": 0.5, "r_out": 2.0},
        "aging": {
            "m_sei": 0.162, "rho_sei": 1690.0,
            "k_f": 8.0e-20, "beta_ct": 0.58, "u_solv": 0.0,
            "eps_sei": 0.05, "c_solv_bulk": 4541.0,
            "d_solv_ref": 1.0e-18, "ea_dsolv": 7.0e4,
        },
        "geometry": {"area": 0.1, "r_cell": 9.0e-3, "phi_th": 1.1e-6},
        "discretization": {"n_r": 10, "n_sei": 10},
        "capacity": {"q_nom_ah": 2.0},
    }


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    write_table(GRAPHITE, DATA / "ocv_graphite.csv")
    write_table(NMC, DATA / "ocv_nmc.csv")
    cell = build_cell()
    module = {"cells": [cell, cell], "r_mod": 4.0, "t_amb": 298.15}
    with open(DATA / "module_nmc18650.json", "w") as fh:
        json.dump(module, fh, indent=1)
    print("wrote", DATA / "module_nmc18650.json")


if __name__ == "__main__":
    main()
