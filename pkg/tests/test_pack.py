"""Series-module assembly: packing, bookkeeping, block-oracle RHS."""

from dataclasses import replace

import numpy as np
import pytest

from packcharge import cell as cm
from packcharge import pack
from packcharge.params import ModuleParameters, initial_cell_state


def test_module_input_bookkeeping():
    u = pack.ModuleInput(i_module=-14.0, i_balance=np.array([-2.0, -5.0]))
    assert np.allclose(u.i_cell, [-12.0, -9.0])
    # sum(I_cell) + sum(I_B) = N * I_0 identically
    assert u.i_cell.sum() + np.sum(u.i_balance) == pytest.approx(2 * -14.0, abs=1e-14)


def test_state_count_formula(module2):
    lay = pack.layout_for(module2, high_fidelity=False)
    n_r = module2.cells[0].n_r
    assert lay.n_states == module2.n_cell * (4 + 2 * (n_r - 1))
    assert lay.n_states == 44  # two cells, 10 radial points


def test_pack_unpack_roundtrip(module2):
    lay = pack.layout_for(module2, high_fidelity=True)
    states = [initial_cell_state(module2.cells[k], 0.2 + 0.1 * k, 296.0 + k,
                                 l_sei=(4 + k) * 1e-9, high_fidelity=True)
              for k in range(2)]
    y = pack.pack_states(states, lay)
    back = pack.unpack_states(y, lay)
    for a, b in zip(states, back):
        assert np.array_equal(a.c_s_n, b.c_s_n)
        assert np.array_equal(a.c_s_p, b.c_s_p)
        assert a.t_core == b.t_core and a.t_surf == b.t_surf
        assert a.l_sei == b.l_sei and a.q_ah == b.q_ah
        assert np.array_equal(a.c_solv, b.c_solv)


def test_single_cell_module_has_no_coupling(module2):
    mod1 = ModuleParameters(cells=(module2.cells[0],), r_mod=module2.r_mod,
                            t_amb=module2.t_amb)
    c = mod1.cells[0]
    st = initial_cell_state(c, 0.35, 297.0, high_fidelity=True)
    u = pack.ModuleInput(-7.0, np.zeros(1))
    dy, v = pack.module_rhs(mod1, [st], u, mode="hf")

    # hand assembly from the cell-level operations
    i_s = cm.side_reaction_current(c, st.c_s_n[-1], st.c_solv[0], st.t_core,
                                   -7.0, st.l_sei)
    dl, dq = cm.aging_rhs(c, i_s)
    g_side = dq
    dcn = cm.solid_diffusion_rhs(c, "n", st.c_s_n, st.t_core, -7.0, g_side)
    dcp = cm.solid_diffusion_rhs(c, "p", st.c_s_p, st.t_core, -7.0, 0.0)
    vc = cm.cell_voltage_state(c, st, -7.0)
    voc = float(cm.open_circuit_voltage(c, st.c_s_n[-1] / c.neg.c_s_max,
                                        st.c_s_p[-1] / c.pos.c_s_max))
    dtc, dts = cm.thermal_rhs(c, st.t_core, st.t_surf, mod1.t_amb, -7.0, vc, voc)
    dsolv = cm.solvent_diffusion_rhs(c, st.c_solv, st.l_sei, dl, i_s, st.t_core)

    m = c.n_radial_states
    assert np.allclose(dy[:m], dcn, rtol=1e-12)
    assert np.allclose(dy[m:2 * m], dcp, rtol=1e-12)
    assert dy[2 * m] == pytest.approx(dtc, rel=1e-12)
    assert dy[2 * m + 1] == pytest.approx(dts, rel=1e-12)  # no r_mod term
    assert dy[2 * m + 2] == pytest.approx(dl, rel=1e-12)
    assert dy[2 * m + 3] == pytest.approx(dq / 3600.0, rel=1e-12)
    assert np.allclose(dy[2 * m + 4:], dsolv, rtol=1e-12)
    assert v[0] == pytest.approx(vc, rel=1e-12)


def test_symmetric_module_equal_cell_rates(module2):
    states = [initial_cell_state(module2.cells[k], 0.3, 299.0, high_fidelity=True)
              for k in range(2)]
    u = pack.ModuleInput(-9.0, np.zeros(2))
    dy, v = pack.module_rhs(module2, states, u, mode="hf")
    lay = pack.layout_for(module2, True)
    m = lay.m
    assert np.array_equal(dy[:m], dy[m:2 * m])                       # anode blocks
    assert np.array_equal(dy[2 * m * 2 - 2 * m:2 * m * 2 - m],
                          dy[2 * m * 2 - m:2 * m * 2])               # cathode blocks
    assert dy[lay.cp_end] == dy[lay.cp_end + 2]                      # core temps
    assert dy[lay.cp_end + 1] == dy[lay.cp_end + 3]                  # surface temps
    assert v[0] == v[1]


def test_heterogeneous_block_oracle(module2):
    """Full rate vector against an independently hand-assembled block system."""
    c1 = module2.cells[0]
    c2 = replace(module2.cells[1], r_out=1.3 * c1.r_out, k_f=2.0 * c1.k_f,
                 r_contact=0.8 * c1.r_contact)
    mod = ModuleParameters(cells=(c1, c2), r_mod=2.5, t_amb=296.0)
    states = [initial_cell_state(c1, 0.22, 297.0, l_sei=4e-9, high_fidelity=True),
              initial_cell_state(c2, 0.41, 301.5, l_sei=6e-9, high_fidelity=True)]
    # perturb so no block is trivially uniform
    rng = np.random.default_rng(7)
    for st in states:
        st.c_s_n[:] *= 1 + 0.01 * rng.standard_normal(st.c_s_n.size)
        st.c_s_p[:] *= 1 + 0.01 * rng.standard_normal(st.c_s_p.size)
        st.c_solv[:] *= 1 + 0.05 * rng.random(st.c_solv.size)
    u = pack.ModuleInput(-13.0, np.array([-4.0, -1.0]))
    dy, v = pack.module_rhs(mod, states, u, mode="hf")

    lay = pack.layout_for(mod, True)
    m = lay.m
    expected = np.zeros(lay.n_states)
    vs = np.zeros(2)
    ts_all = [states[0].t_surf, states[1].t_surf]
    for k, (c, st) in enumerate(zip(mod.cells, states)):
        ik = u.i_cell[k]
        i_s = cm.side_reaction_current(c, st.c_s_n[-1], st.c_solv[0], st.t_core,
                                       ik, st.l_sei)
        dl, g_side = cm.aging_rhs(c, i_s)
        expected[k * m:(k + 1) * m] = cm.solid_diffusion_rhs(
            c, "n", st.c_s_n, st.t_core, ik, g_side)
        expected[lay.cn_end + k * m:lay.cn_end + (k + 1) * m] = cm.solid_diffusion_rhs(
            c, "p", st.c_s_p, st.t_core, ik, 0.0)
        vc = cm.cell_voltage_state(c, st, ik)
        voc = float(cm.open_circuit_voltage(c, st.c_s_n[-1] / c.neg.c_s_max,
                                            st.c_s_p[-1] / c.pos.c_s_max))
        dtc, dts = cm.thermal_rhs(c, st.t_core, st.t_surf, mod.t_amb, ik, vc, voc)
        other = ts_all[1 - k]
        dts += (other - st.t_surf) / (mod.r_mod * c.c_surf)
        expected[lay.cp_end + 2 * k] = dtc
        expected[lay.cp_end + 2 * k + 1] = dts
        expected[lay.t_end + k] = dl
        expected[lay.l_end + k] = g_side / 3600.0
        expected[lay.q_end + k * c.n_sei:lay.q_end + (k + 1) * c.n_sei] = \
            cm.solvent_diffusion_rhs(c, st.c_solv, st.l_sei, dl, i_s, st.t_core)
        vs[k] = vc
    scale = np.maximum(1e-14, np.abs(expected))
    assert np.max(np.abs(dy - expected) / scale) < 1e-9
    assert np.allclose(v, vs, rtol=1e-12)


def test_validity_margin_enforced(module2):
    lay = pack.layout_for(module2, False)
    st = [initial_cell_state(module2.cells[k], 0.3, 298.15) for k in range(2)]
    y = pack.pack_states(st, lay)
    y[3] = 1e-7 * module2.cells[0].neg.c_s_max  # inside margin band
    from packcharge.exceptions import SimulationValidityError
    with pytest.raises(SimulationValidityError):
        pack.check_validity(y, module2, lay, t=12.5)
