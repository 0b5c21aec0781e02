"""Parameter-tuning study for the committed cell data: sweeps the SEI-kinetics
constants and reports the quantities the acceptance trends depend on:

  * per-charge SEI growth over {3,5,8}C x {15,25,35}C (magnitude + monotone
    trends in C-rate and T),
  * kinetic-vs-transport share (surface solvent depletion at 5C/25C),
  * per-cycle capacity-loss ordering 3C vs 8C.

Run:  python3 scripts/tune_aging.py [k_f] [d_solv_ref] [ea_dsolv] [u_solv]
"""

import sys
from dataclasses import replace

import numpy as np

from packcharge.params import load_default_module, initial_cell_state
from packcharge.simulate import InputProfile, simulate
from packcharge.surrogate import _terminal_sei


def study(cell):
    print(f"k_f={cell.k_f:g} d_solv={cell.d_solv_ref:g} ea_dsolv={cell.ea_dsolv:g} "
          f"u_solv={cell.u_solv:g} beta_ct={cell.beta_ct:g}")
    grid = {}
    for ta in (288.15, 298.15, 308.15):
        row = []
        for c_rate in (3, 5, 8):
            lhf, tf = _terminal_sei(cell, -2.0 * c_rate, ta, (0.2, 0.8), 5e-9, "hf")
            dl = (lhf - 5e-9) / 5e-9 * 100
            grid[(ta, c_rate)] = dl
            row.append(f"{c_rate}C: dL={dl:6.2f}% tf={tf:6.1f}s")
        print(f"  T={ta - 273.15:4.1f}C  " + "  ".join(row))
    # trends
    ok_t = all(grid[(288.15, c)] < grid[(298.15, c)] < grid[(308.15, c)] for c in (3, 5, 8))
    ok_c = all(grid[(ta, 3)] < grid[(ta, 5)] < grid[(ta, 8)] for ta in (288.15, 298.15, 308.15))
    print(f"  monotone in T: {ok_t}   monotone in C: {ok_c}")
    t_ratio = grid[(308.15, 5)] / grid[(288.15, 5)]
    print(f"  T leverage (35C/15C at 5C): {t_ratio:.2f}x")

    # solvent depletion at 5C/25C: kinetic share indicator
    from packcharge.params import ModuleParameters
    mod = ModuleParameters(cells=(cell,), r_mod=1e3, t_amb=298.15)
    st = [initial_cell_state(cell, 0.2, 298.15, high_fidelity=True)]
    prof = InputProfile.constant(-10.0, np.zeros(1), 4000.0)
    traj, _, _ = simulate(mod, st, prof, 4000.0, mode="hf", soc_targets=[0.8])
    csurf_end = traj.y[-1, traj.layout.q_end]
    ratio = csurf_end / (cell.eps_sei * cell.c_solv_bulk)
    print(f"  c_solv_surf/boundary at end of 5C/25C charge: {ratio:.3f}")

    # per-cycle aging x duration ordering proxy (uses the dL numbers directly)
    print(f"  per-charge dL 25C:  3C={grid[(298.15, 3)]:.2f}%  8C={grid[(298.15, 8)]:.2f}%"
          f"   (need 8C > 3C)")
    return grid


def main():
    mod = load_default_module()
    cell = mod.cells[0]
    if len(sys.argv) > 1:
        kw = {}
        for arg in sys.argv[1:]:
            k, v = arg.split("=")
            kw[k] = float(v)
        cell = replace(cell, **kw)
    study(cell)


if __name__ == "__main__":
    main()
