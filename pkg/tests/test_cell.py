"""Single-cell physics: each operation against an independent oracle."""

import math

import numpy as np
import pytest

from packcharge import cell as cm
from packcharge.exceptions import DomainError, ExtrapolationError
from packcharge.params import initial_cell_state


# -- Arrhenius ----------------------------------------------------------------

def test_arrhenius_identity_at_reference():
    assert cm.arrhenius(3e-14, 5e4, 298.0, 298.0, 8.314462618) == 3e-14


def test_arrhenius_zero_activation():
    assert cm.arrhenius(3e-14, 0.0, 310.0, 298.0, 8.314462618) == 3e-14


def test_arrhenius_scalar_oracle():
    # independent high-precision evaluation of the exponential law
    phi_ref, ea, tc, tref, rg = 3e-14, 5e4, 308.0, 298.0, 8.314462618
    expected = phi_ref * math.exp((ea / rg) * (1.0 / tref - 1.0 / tc))
    got = cm.arrhenius(phi_ref, ea, tc, tref, rg)
    assert abs(got - expected) <= 1e-12 * expected


def test_arrhenius_rejects_nonpositive_temperature():
    with pytest.raises(DomainError):
        cm.arrhenius(1.0, 1e4, -5.0, 298.0, 8.314462618)


# -- exchange current density -------------------------------------------------

def test_exchange_current_peaks_at_half_concentration(cell0):
    cmax = cell0.neg.c_s_max
    mid = cm.exchange_current_density(cell0, "n", 0.5 * cmax, 298.0)
    for frac in (0.1, 0.3, 0.7, 0.9):
        assert mid >= cm.exchange_current_density(cell0, "n", frac * cmax, 298.0)


def test_exchange_current_vanishes_at_zero_concentration(cell0):
    cmax = cell0.neg.c_s_max
    vals = [cm.exchange_current_density(cell0, "n", f * cmax, 298.0)
            for f in (1e-3, 1e-5, 1e-7)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 2e-2 * vals[0]   # i0 ~ sqrt(c) -> 0 as c -> 0


def test_exchange_current_formula_oracle(cell0):
    c_surf = 0.5 * cell0.pos.c_s_max
    k = cell0.pos.k_ref  # T = T_ref, so the Arrhenius factor is exactly 1
    expected = k * cell0.faraday * math.sqrt(
        cell0.c_e_avg * c_surf * (cell0.pos.c_s_max - c_surf))
    got = cm.exchange_current_density(cell0, "p", c_surf, cell0.t_ref)
    assert abs(got - expected) <= 1e-12 * expected


def test_exchange_current_domain_error(cell0):
    with pytest.raises(DomainError):
        cm.exchange_current_density(cell0, "n", 1.5 * cell0.neg.c_s_max, 298.0)


# -- overpotential ------------------------------------------------------------

def test_overpotential_zero_current(cell0):
    assert cm.overpotential(cell0, "n", 0.4 * cell0.neg.c_s_max, 298.0, 0.0) == 0.0


def test_overpotential_sign_follows_current(cell0):
    c = 0.4 * cell0.neg.c_s_max
    eta_chg = cm.overpotential(cell0, "n", c, 298.0, -4.0)
    eta_dis = cm.overpotential(cell0, "n", c, 298.0, 4.0)
    assert eta_chg < 0 < eta_dis
    assert eta_chg == -eta_dis  # odd function


def test_overpotential_formula_oracle(cell0):
    c = 0.5 * cell0.neg.c_s_max
    i_cell = -4.0
    ne = cell0.neg
    i0 = ne.k_ref * cell0.faraday * math.sqrt(
        cell0.c_e_avg * c * (ne.c_s_max - c))
    expected = (cell0.r_gas * cell0.t_ref / (0.5 * cell0.faraday)) * math.asinh(
        i_cell / (2.0 * cell0.area * ne.a_s * ne.thickness * i0))
    got = cm.overpotential(cell0, "n", c, cell0.t_ref, i_cell)
    assert abs(got - expected) <= 1e-12 * abs(expected)


# -- resistances --------------------------------------------------------------

def test_sei_resistance_linear_in_thickness(cell0):
    r1 = cm.sei_resistance(cell0, 5e-9)
    r2 = cm.sei_resistance(cell0, 1e-8)
    assert r2 == pytest.approx(2.0 * r1, rel=1e-14)


def test_sei_resistance_formula_oracle(cell0):
    l_sei = 5e-9
    ne = cell0.neg
    expected = l_sei / (ne.a_s * cell0.area * ne.thickness * cell0.kappa_sei)
    assert cm.sei_resistance(cell0, l_sei) == pytest.approx(expected, rel=1e-14)


def test_sei_resistance_strictly_increasing(cell0):
    ls = np.linspace(1e-9, 2e-8, 20)
    rs = [cm.sei_resistance(cell0, l) for l in ls]
    assert np.all(np.diff(rs) > 0)


def test_electrolyte_resistance_scaling(cell0):
    from dataclasses import replace
    base = cm.electrolyte_resistance(cell0)
    doubled = replace(cell0, kappa_eff_n=2 * cell0.kappa_eff_n,
                      kappa_eff_s=2 * cell0.kappa_eff_s,
                      kappa_eff_p=2 * cell0.kappa_eff_p)
    assert cm.electrolyte_resistance(doubled) == pytest.approx(base / 2, rel=1e-14)


def test_electrolyte_resistance_formula_oracle(cell0):
    expected = (cell0.neg.thickness / cell0.kappa_eff_n
                + 2 * cell0.sep_thickness / cell0.kappa_eff_s
                + cell0.pos.thickness / cell0.kappa_eff_p) / (2 * cell0.area)
    assert cm.electrolyte_resistance(cell0) == pytest.approx(expected, rel=1e-14)


# -- cell voltage -------------------------------------------------------------

def test_cell_voltage_open_circuit(cell0):
    st = initial_cell_state(cell0, 0.5, 298.15)
    v = cm.cell_voltage_state(cell0, st, 0.0)
    expected = cell0.pos.ocv(st.c_s_p[-1] / cell0.pos.c_s_max) \
        - cell0.neg.ocv(st.c_s_n[-1] / cell0.neg.c_s_max)
    assert v == pytest.approx(float(expected), rel=1e-14)


def test_cell_voltage_charging_exceeds_ocv(cell0):
    st = initial_cell_state(cell0, 0.5, 298.15)
    v_oc = cm.cell_voltage_state(cell0, st, 0.0)
    v_chg = cm.cell_voltage_state(cell0, st, -4.0)
    assert v_chg > v_oc


def test_cell_voltage_formula_oracle(cell0):
    st = initial_cell_state(cell0, 0.5, 298.15)
    i_cell = -4.0
    cns, cps = st.c_s_n[-1], st.c_s_p[-1]
    up = float(cell0.pos.ocv(cps / cell0.pos.c_s_max))
    un = float(cell0.neg.ocv(cns / cell0.neg.c_s_max))
    eta = {}
    for tag, el, c in (("n", cell0.neg, cns), ("p", cell0.pos, cps)):
        i0 = el.k_ref * math.exp((el.ea_k / cell0.r_gas)
                                 * (1 / cell0.t_ref - 1 / st.t_core)) \
            * cell0.faraday * math.sqrt(cell0.c_e_avg * c * (el.c_s_max - c))
        eta[tag] = (cell0.r_gas * st.t_core / (0.5 * cell0.faraday)) * math.asinh(
            i_cell / (2 * cell0.area * el.a_s * el.thickness * i0))
    r_el = (cell0.neg.thickness / cell0.kappa_eff_n
            + 2 * cell0.sep_thickness / cell0.kappa_eff_s
            + cell0.pos.thickness / cell0.kappa_eff_p) / (2 * cell0.area)
    r_sei = st.l_sei / (cell0.neg.a_s * cell0.area * cell0.neg.thickness * cell0.kappa_sei)
    expected = up + eta["p"] - un - eta["n"] - i_cell * (cell0.r_contact + r_el + r_sei)
    assert cm.cell_voltage_state(cell0, st, i_cell) == pytest.approx(expected, rel=1e-12)


def test_cell_voltage_extrapolation_error(cell0):
    # cathode table starts above zero stoichiometry: a concentration that is
    # physically valid but below the tabulated domain must raise
    st = initial_cell_state(cell0, 0.5, 298.15)
    lo = cell0.pos.ocv.domain[0]
    bad_cp = 0.5 * lo * cell0.pos.c_s_max
    with pytest.raises(ExtrapolationError):
        cm.cell_voltage(cell0, st.c_s_n[-1], bad_cp, st.t_core, st.l_sei, -1.0)


# -- bulk SOC -----------------------------------------------------------------

def test_soc_bulk_endpoints_and_midpoint(cell0):
    m = cell0.n_radial_states
    for el, pars in (("n", cell0.neg), ("p", cell0.pos)):
        c100 = np.full(m, pars.theta100 * pars.c_s_max)
        c0 = np.full(m, pars.theta0 * pars.c_s_max)
        cmid = 0.5 * (c100 + c0)
        assert cm.soc_bulk(cell0, el, c100) == pytest.approx(1.0, abs=1e-12)
        assert cm.soc_bulk(cell0, el, c0) == pytest.approx(0.0, abs=1e-12)
        assert cm.soc_bulk(cell0, el, cmid) == pytest.approx(0.5, abs=1e-12)


# -- solid diffusion ----------------------------------------------------------

def dense_stencil(m):
    """Independent construction of the radial FDM matrix: row i carries
    [1 - 1/i, -2, 1 + 1/i], first row [-2, 2], last row [2, -2]."""
    a = np.zeros((m, m))
    for i in range(1, m + 1):
        r = i - 1
        a[r, r] = -2.0
        if i == 1:
            a[r, r + 1] = 2.0
        elif i == m:
            a[r, r - 1] = 2.0
        else:
            a[r, r - 1] = 1.0 - 1.0 / i
            a[r, r + 1] = 1.0 + 1.0 / i
    return a


def test_solid_diffusion_uniform_profile_is_stationary(cell0):
    c = np.full(cell0.n_radial_states, 0.4 * cell0.neg.c_s_max)
    dc = cm.solid_diffusion_rhs(cell0, "n", c, 298.15, 0.0, 0.0)
    assert np.max(np.abs(dc)) < 1e-8


def test_solid_diffusion_charging_raises_anode_surface(cell0):
    c = np.full(cell0.n_radial_states, 0.4 * cell0.neg.c_s_max)
    dc = cm.solid_diffusion_rhs(cell0, "n", c, 298.15, -8.0, 0.0)
    assert dc[-1] > 0


def test_solid_diffusion_dense_oracle(cell0):
    m = cell0.n_radial_states
    for el_tag, el, i_cell, g_side in (("n", cell0.neg, -6.0, -0.02),
                                       ("p", cell0.pos, -6.0, 0.0)):
        lo, hi = sorted((el.theta0, el.theta100))
        c = np.linspace(0.95 * lo, 0.9 * hi, m) * el.c_s_max  # linear radial profile
        t_core = 303.0
        d = el.d_s_ref * math.exp((el.ea_ds / cell0.r_gas)
                                  * (1 / cell0.t_ref - 1 / t_core))
        dr = el.r_s / m
        alpha = d / dr ** 2
        sign = -1.0 if el_tag == "n" else 1.0
        beta = sign / (cell0.area * el.thickness * cell0.faraday * el.a_s * dr)
        bvec = np.zeros(m)
        bvec[-1] = 2.0 + 2.0 / m
        expected = alpha * dense_stencil(m) @ c + beta * bvec * (i_cell - g_side)
        got = cm.solid_diffusion_rhs(cell0, el_tag, c, t_core, i_cell, g_side)
        assert np.allclose(got, expected, rtol=1e-10, atol=1e-10 * np.abs(expected).max())


def test_grid_matches_printed_matrix(cell0):
    g = cm.electrode_grid(cell0, "n")
    assert np.allclose(g.dense_matrix, dense_stencil(cell0.n_radial_states), rtol=1e-14)
    assert g.bvec[-1] == pytest.approx(2 + 2 / cell0.n_radial_states, rel=1e-14) \
        or g.bvec[-1] == pytest.approx(2 + 2 / (cell0.n_r - 1), rel=1e-14)


# -- side reaction and aging --------------------------------------------------

def test_side_reaction_zero_solvent(cell0):
    st = initial_cell_state(cell0, 0.5, 298.15)
    i_s = cm.side_reaction_current(cell0, st.c_s_n[-1], 0.0, 298.15, -4.0, st.l_sei)
    assert i_s == 0.0


def test_side_reaction_always_negative(cell0):
    st = initial_cell_state(cell0, 0.5, 298.15)
    for i_cell in (-16.0, -6.0, 0.0, 2.0):
        i_s = cm.side_reaction_current(cell0, st.c_s_n[-1],
                                       cell0.eps_sei * cell0.c_solv_bulk,
                                       300.0, i_cell, st.l_sei)
        assert i_s < 0


def test_side_reaction_formula_oracle(cell0):
    st = initial_cell_state(cell0, 0.6, 298.15)
    c_solv, i_cell, t_core = 150.0, -8.0, 301.0
    cns = st.c_s_n[-1]
    ne = cell0.neg
    i0 = ne.k_ref * math.exp((ne.ea_k / cell0.r_gas) * (1 / cell0.t_ref - 1 / t_core)) \
        * cell0.faraday * math.sqrt(cell0.c_e_avg * cns * (ne.c_s_max - cns))
    eta_n = (cell0.r_gas * t_core / (0.5 * cell0.faraday)) * math.asinh(
        i_cell / (2 * cell0.area * ne.a_s * ne.thickness * i0))
    phi = float(ne.ocv(cns / ne.c_s_max)) + eta_n
    r_sei = st.l_sei / (ne.a_s * cell0.area * ne.thickness * cell0.kappa_sei)
    expected = -2 * cell0.faraday * cell0.k_f * cns ** 2 * c_solv * math.exp(
        -cell0.beta_ct * cell0.faraday / (cell0.r_gas * t_core)
        * (phi - r_sei * i_cell - cell0.u_solv))
    got = cm.side_reaction_current(cell0, cns, c_solv, t_core, i_cell, st.l_sei)
    assert got == pytest.approx(expected, rel=1e-12)


def test_aging_rates_zero_at_zero_side_current(cell0):
    dl, dq = cm.aging_rhs(cell0, 0.0)
    assert dl == 0.0 and dq == 0.0


def test_aging_identity_holds_exactly(cell0):
    # dQ/dt * beta_sei = dL/dt for any side current
    for i_s in (-1.0, -1e-4, -37.5):
        dl, dq = cm.aging_rhs(cell0, i_s)
        assert dl == dq * cm.beta_sei(cell0)
        assert dl >= 0.0 and dq <= 0.0


def test_aging_rates_scalar_oracle(cell0):
    ne = cell0.neg
    i_s = -1.0
    g = ne.a_s * ne.thickness * cell0.area * i_s
    expected_dl = -cell0.m_sei / (2 * cell0.faraday * cell0.rho_sei
                                  * ne.a_s * ne.thickness * cell0.area) * g
    dl, dq = cm.aging_rhs(cell0, i_s)
    assert dl == pytest.approx(expected_dl, rel=1e-14)
    assert dq == pytest.approx(g, rel=1e-14)


# -- thermal ------------------------------------------------------------------

def test_thermal_equilibrium(cell0):
    dtc, dts = cm.thermal_rhs(cell0, 298.15, 298.15, 298.15, 0.0, 3.7, 3.7)
    assert dtc == 0.0 and dts == 0.0


def test_thermal_heating_during_charge(cell0):
    # uniform temperature, charging: core heats at I*(V_oc - V)/C_c > 0
    dtc, dts = cm.thermal_rhs(cell0, 298.15, 298.15, 298.15, -8.0, 3.9, 3.7)
    assert dtc == pytest.approx(-8.0 * (3.7 - 3.9) / cell0.c_core, rel=1e-14)
    assert dtc > 0


def test_thermal_scalar_oracle(cell0):
    tc, ts, tamb, i, v, voc = 305.0, 301.0, 298.15, -10.0, 3.95, 3.8
    dtc, dts = cm.thermal_rhs(cell0, tc, ts, tamb, i, v, voc)
    assert dtc == pytest.approx((i * (voc - v) + (ts - tc) / cell0.r_core)
                                / cell0.c_core, rel=1e-14)
    assert dts == pytest.approx(((tamb - ts) / cell0.r_out
                                 - (ts - tc) / cell0.r_core) / cell0.c_surf, rel=1e-14)


# -- solvent diffusion --------------------------------------------------------

def test_solvent_uniform_no_reaction_is_stationary(cell0):
    c = np.full(cell0.n_sei, cell0.eps_sei * cell0.c_solv_bulk)
    dc = cm.solvent_diffusion_rhs(cell0, c, 5e-9, 0.0, 0.0, 298.15)
    assert np.max(np.abs(dc)) < 1e-12


def test_solvent_last_node_pinned(cell0, rng):
    for _ in range(5):
        c = cell0.eps_sei * cell0.c_solv_bulk * (0.5 + 0.5 * rng.random(cell0.n_sei))
        dc = cm.solvent_diffusion_rhs(cell0, c, 4e-9, 3e-13, -1e-3, 302.0)
        assert dc[-1] == 0.0


def test_solvent_dense_oracle(cell0):
    """Direct re-implementation of the printed three-case discretization."""
    n = cell0.n_sei
    l_sei, dl_dt, i_s, t_core = 6e-9, 2.5e-13, -8e-4, 299.0
    c = np.linspace(80.0, cell0.eps_sei * cell0.c_solv_bulk, n)
    d = cell0.d_solv_ref * math.exp((cell0.ea_dsolv / cell0.r_gas)
                                    * (1 / cell0.t_ref - 1 / t_core))
    dxi = 1.0 / (n - 1)
    alpha = d / (l_sei * dxi) ** 2
    beta = 2.0 / (l_sei * dxi) + dl_dt / d
    expected = np.zeros(n)
    expected[0] = 2 * alpha * (c[1] - c[0]) + beta * (i_s / cell0.faraday - dl_dt * c[0])
    for idx in range(1, n - 1):          # 1-based node i = idx + 1, xi = idx * dxi
        xi = idx * dxi
        gamma = (xi - 1.0) / (2 * l_sei * dxi) * dl_dt
        expected[idx] = alpha * (c[idx + 1] - 2 * c[idx] + c[idx - 1]) \
            + gamma * (c[idx + 1] - c[idx - 1])
    expected[-1] = 0.0
    got = cm.solvent_diffusion_rhs(cell0, c, l_sei, dl_dt, i_s, t_core)
    assert np.allclose(got, expected, rtol=1e-12, atol=1e-12 * np.abs(expected).max())


def test_solvent_requires_positive_thickness(cell0):
    c = np.full(cell0.n_sei, 100.0)
    with pytest.raises(DomainError):
        cm.solvent_diffusion_rhs(cell0, c, -1e-9, 0.0, 0.0, 298.0)


# -- time scales --------------------------------------------------------------

def test_timescale_quadratic_in_radius(cell0):
    from dataclasses import replace
    t1, _, _ = cm.characteristic_timescales(cell0)
    t2, _, _ = cm.characteristic_timescales(replace(cell0, r_cell=2 * cell0.r_cell))
    assert t2 == pytest.approx(4 * t1, rel=1e-14)


def test_timescale_ordering_and_magnitudes(cell0):
    t_ter, t_elec, t_ag = cm.characteristic_timescales(cell0)
    assert t_ter < t_elec < t_ag
    assert t_elec / t_ag < 1e-3          # aging far slower than diffusion
    assert 10.0 <= t_ter <= 100.0        # thermal: tens of seconds
    assert 1e2 <= t_elec <= 1e4          # electrochemical: ~1e3 s
    assert 1e7 <= t_ag <= 1e9            # aging: ~1e8 s
