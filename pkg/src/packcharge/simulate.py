"""Module simulation: adaptive integration, event logging, cycling.

`simulate` wraps the RK45 kernel with trajectory capture and physical
validity checks; `cycle` runs repeated charge cycles with per-cell
bypass-on-target and persistent aging states.  Operating-constraint touches
(voltage/temperature/stoichiometry bounds) are logged as events, never
errors; hard errors are reserved for states that leave the physically valid
domain.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .accel import ModulePack, build_pack
from .exceptions import ProtocolError, SimulationValidityError
from .pack import StateLayout, layout_for, pack_states, state_scales, unpack_states
from .params import CellParameters, ModuleParameters, initial_cell_state

_INVALID_MSG = {1: "solid concentration left (0, c_s_max) validity band",
                2: "non-positive temperature",
                3: "non-positive SEI thickness",
                4: "non-positive capacity",
                5: "negative solvent concentration"}

STORE_CAP = 8192


@dataclass(frozen=True, eq=False)
class InputProfile:
    """Piecewise-polynomial module/balancing currents plus bypass switches.

    tknots: (S+1,) segment boundaries in seconds.
    ci0:    (S, D) polynomial coefficients per segment, highest power first,
            in the local variable t - tknots[seg].
    cib:    (n_cell, S, D) same for each balancing current.
    Bypass: cell k's effective current ramps to zero over
            [sw_t[k] - sw_w[k], sw_t[k]] when use_switch[k] is set.
    """
    tknots: np.ndarray
    ci0: np.ndarray
    cib: np.ndarray
    sw_t: np.ndarray
    sw_w: np.ndarray
    use_switch: np.ndarray

    @property
    def n_cell(self):
        return self.cib.shape[0]

    @property
    def duration(self):
        return float(self.tknots[-1])

    @classmethod
    def constant(cls, i0: float, ib, horizon: float) -> "InputProfile":
        ib = np.atleast_1d(np.asarray(ib, dtype=float))
        nc = ib.size
        return cls(tknots=np.array([0.0, horizon]),
                   ci0=np.array([[float(i0)]]),
                   cib=ib.reshape(nc, 1, 1).copy(),
                   sw_t=np.zeros(nc), sw_w=np.full(nc, 1.0),
                   use_switch=np.zeros(nc, dtype=np.int64))

    @classmethod
    def sampled(cls, t: np.ndarray, i0: np.ndarray, ib: np.ndarray) -> "InputProfile":
        """Piecewise-linear profile through samples (t strictly increasing)."""
        t = np.asarray(t, dtype=float)
        i0 = np.asarray(i0, dtype=float)
        ib = np.atleast_2d(np.asarray(ib, dtype=float))
        nseg = t.size - 1
        ci0 = np.zeros((nseg, 2))
        dt = np.diff(t)
        ci0[:, 0] = np.diff(i0) / dt
        ci0[:, 1] = i0[:-1]
        nc = ib.shape[0]
        cib = np.zeros((nc, nseg, 2))
        for k in range(nc):
            cib[k, :, 0] = np.diff(ib[k]) / dt
            cib[k, :, 1] = ib[k, :-1]
        return cls(tknots=t.copy(), ci0=ci0, cib=cib,
                   sw_t=np.zeros(nc), sw_w=np.full(nc, 1.0),
                   use_switch=np.zeros(nc, dtype=np.int64))

    def with_switches(self, sw_t, sw_w) -> "InputProfile":
        nc = self.n_cell
        return InputProfile(self.tknots, self.ci0, self.cib,
                            np.asarray(sw_t, dtype=float),
                            np.asarray(sw_w, dtype=float),
                            np.ones(nc, dtype=np.int64))


@dataclass(eq=False)
class Trajectory:
    t: np.ndarray            # (n,)
    y: np.ndarray            # (n, n_states)
    i0: np.ndarray           # (n,)
    i_balance: np.ndarray    # (n, n_cell)
    i_cell: np.ndarray       # (n, n_cell)
    v_cell: np.ndarray       # (n, n_cell)
    soc: np.ndarray          # (n, n_cell)
    mod: ModuleParameters
    layout: StateLayout
    events: list = field(default_factory=list)

    @property
    def n_cell(self):
        return self.mod.n_cell

    def states_at(self, idx: int):
        return unpack_states(self.y[idx], self.layout)

    @property
    def terminal_states(self):
        return self.states_at(-1)

    def column(self, name: str, k: int) -> np.ndarray:
        lay = self.layout
        if name == "Tc":
            return self.y[:, lay.cp_end + 2 * k]
        if name == "Ts":
            return self.y[:, lay.cp_end + 2 * k + 1]
        if name == "Lsei":
            return self.y[:, lay.t_end + k]
        if name == "Q":
            return self.y[:, lay.l_end + k]
        raise KeyError(name)

    def to_csv(self, path):
        nc = self.n_cell
        header = ["t", "I0"]
        for k in range(1, nc + 1):
            header += [f"IB_{k}", f"Icell_{k}", f"V_{k}", f"SOC_{k}",
                       f"Tc_{k}", f"Ts_{k}", f"Lsei_{k}", f"Q_{k}"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(self.t.size):
                row = [f"{self.t[i]:.6f}", f"{self.i0[i]:.9g}"]
                for k in range(nc):
                    row += [f"{self.i_balance[i, k]:.9g}", f"{self.i_cell[i, k]:.9g}",
                            f"{self.v_cell[i, k]:.9g}", f"{self.soc[i, k]:.9g}",
                            f"{self.column('Tc', k)[i]:.9g}", f"{self.column('Ts', k)[i]:.9g}",
                            f"{self.column('Lsei', k)[i]:.12g}", f"{self.column('Q', k)[i]:.12g}"]
                w.writerow(row)


def _surrogate_arrays(surrogate, t_amb: float, nc: int):
    if surrogate is None:
        return np.zeros((nc, 1)), 0.0, 1.0
    coefs, mid, half = surrogate.kernel_poly(t_amb)
    coefs = np.asarray(coefs, dtype=float)
    if coefs.ndim == 1:
        coefs = np.tile(coefs, (nc, 1))
    return coefs, float(mid), float(half)


def _scan_bound_events(traj: Trajectory, bounds) -> list:
    """Log crossings of operating bounds along the stored trajectory."""
    events = []
    t = traj.t

    def scan(series, lo, hi, label, cell):
        above = series > hi
        below = series < lo
        for kind, mask in (("upper", above), ("lower", below)):
            if not mask.any():
                continue
            flips = np.flatnonzero(np.diff(mask.astype(int)) != 0)
            starts = [0] if mask[0] else []
            starts += [i + 1 for i in flips if mask[i + 1]]
            for i in starts:
                events.append({"t": float(t[i]), "cell": cell, "bound": label,
                               "side": kind,
                               "value": float(series[i])})

    for k in range(traj.n_cell):
        scan(traj.v_cell[:, k], bounds.v_min, bounds.v_max, "voltage", k)
        scan(traj.column("Tc", k), bounds.t_min, bounds.t_max, "core-temperature", k)
        scan(traj.column("Ts", k), bounds.t_min, bounds.t_max, "surface-temperature", k)
        lay = traj.layout
        c = traj.mod.cells[k]
        for el, sl, cmax, win in (
                ("anode", slice(k * lay.m, (k + 1) * lay.m), c.neg.c_s_max,
                 c.neg.theta_window),
                ("cathode", slice(lay.cn_end + k * lay.m, lay.cn_end + (k + 1) * lay.m),
                 c.pos.c_s_max, c.pos.theta_window)):
            block = traj.y[:, sl]
            scan(block.min(axis=1) / cmax, win[0], np.inf, f"{el}-stoichiometry", k)
            scan(block.max(axis=1) / cmax, -np.inf, win[1], f"{el}-stoichiometry", k)
    return sorted(events, key=lambda e: e["t"])


def simulate(mod: ModuleParameters, initial, profile: InputProfile, horizon: float,
             mode: str = "surrogate", surrogate=None, tol: float = 1e-8,
             aging: bool = True, bounds=None, soc_targets=None, active=None,
             t0: float = 0.0):
    """Integrate the module under the given input profile.

    `initial` is either a list of CellState or a flat state vector matching
    the mode's layout.  Returns (Trajectory, status, event_cell); status is
    'done' or 'target' (a cell hit its SOC target event).  Raises
    SimulationValidityError if the state leaves the physical domain.
    """
    hf = mode in ("hf", "high-fidelity")
    pk: ModulePack = build_pack(mod)
    layout = pk.layout_hf if hf else pk.layout
    if isinstance(initial, (list, tuple)):
        y0 = pack_states(initial, layout)
    else:
        y0 = np.asarray(initial, dtype=float).copy()
    if y0.size != layout.n_states:
        raise ValueError(f"state size {y0.size} does not match layout ({layout.n_states})")
    nc = mod.n_cell
    scales = state_scales(mod, layout)
    surr_c, surr_mid, surr_half = _surrogate_arrays(surrogate, mod.t_amb, nc)
    if not hf and aging and surrogate is None:
        raise ValueError("surrogate mode with aging enabled needs a surrogate model")
    targets = np.full(nc, np.nan) if soc_targets is None else np.asarray(soc_targets, float)
    act = np.ones(nc) if active is None else np.asarray(active, dtype=float)

    ts_buf = np.empty(STORE_CAP)
    ys_buf = np.empty((STORE_CAP, layout.n_states))
    aux_buf = np.empty((STORE_CAP, 1 + 3 * nc))
    status, nstore, t_end, event_cell, invalid_code, y_end = kernels.integrate(
        y0, t0, t0 + horizon, tol, scales,
        profile.tknots, profile.ci0, profile.cib,
        profile.sw_t, profile.sw_w, profile.use_switch, act,
        surr_c, surr_mid, surr_half,
        1 if hf else 0, 1 if aging else 0, targets, layout.m,
        pk.packf, pk.oxn, pk.ocn, pk.oxp, pk.ocp,
        pk.wvol, mod.r_mod, mod.t_amb,
        ts_buf, ys_buf, aux_buf)

    if status == kernels.STATUS_INVALID:
        raise SimulationValidityError(_INVALID_MSG.get(invalid_code, "invalid state"),
                                      t=t_end, cell=int(event_cell))
    if status == kernels.STATUS_MINSTEP:
        raise RuntimeError(f"integrator step size underflow at t={t_end:.6g}s")

    t = ts_buf[:nstore].copy()
    y = ys_buf[:nstore].copy()
    aux = aux_buf[:nstore]
    soc = np.empty((nstore, nc))
    for k in range(nc):
        soc[:, k] = np.array([kernels.soc_cathode(y[i], pk.packf, pk.wvol,
                                                  nc, layout.m, k)
                              for i in range(nstore)])
    traj = Trajectory(t=t, y=y, i0=aux[:, 0].copy(),
                      i_balance=aux[:, 1:1 + nc].copy(),
                      i_cell=aux[:, 1 + nc:1 + 2 * nc].copy(),
                      v_cell=aux[:, 1 + 2 * nc:1 + 3 * nc].copy(),
                      soc=soc, mod=mod, layout=layout)
    if bounds is not None:
        traj.events = _scan_bound_events(traj, bounds)
    return traj, ("target" if status == kernels.STATUS_EVENT else "done"), int(event_cell)


@dataclass(eq=False)
class CycleRecord:
    cycle: int
    charge_time: float
    t_cell: np.ndarray       # per-cell time to reach target
    q_ah: np.ndarray
    l_sei: np.ndarray
    dq_loss_pct: np.ndarray


def cycle(mod: ModuleParameters, protocol, n_cycles: int, rest_policy: str = "instant",
          soc_initial=None, soc_target: float = 0.8, mode: str = "hf",
          surrogate=None, tol: float = 1e-8, t_max_cycle: float = 4000.0):
    """Repeated charge cycles with per-cell bypass once a cell hits target.

    protocol: ("cc", c_rate) for constant current, or ("replay", InputProfile)
    for a fixed optimal-profile replay.  Concentrations and temperatures are
    re-initialized each cycle (instant rest policy); SEI thickness and
    capacity persist.  Returns a list of CycleRecord.
    """
    nc = mod.n_cell
    soc_initial = np.full(nc, 0.2) if soc_initial is None else np.asarray(soc_initial, float)
    hf = mode in ("hf", "high-fidelity")
    q_nom = np.array([c.q_nom_ah for c in mod.cells])
    l_now = np.array([5e-9] * nc)
    q_now = q_nom.copy()
    records = []
    for icyc in range(n_cycles):
        states = [initial_cell_state(mod.cells[k], soc_initial[k], mod.t_amb,
                                     l_sei=l_now[k], q_ah=q_now[k], high_fidelity=hf)
                  for k in range(nc)]
        if protocol[0] == "cc":
            rate = protocol[1]
            i_amp = -rate * float(q_nom.max())
            profile = InputProfile.constant(i_amp, np.zeros(nc), t_max_cycle)
        elif protocol[0] == "replay":
            profile = protocol[1]
        else:
            raise ProtocolError(f"unknown protocol {protocol[0]!r}", cycle=icyc)

        active = np.ones(nc)
        t_cell = np.full(nc, np.nan)
        t_now = 0.0
        y = pack_states(states, layout_for(mod, hf))
        try:
            while active.any() and t_now < t_max_cycle:
                traj, status, ev = simulate(
                    mod, y, profile, t_max_cycle - t_now, mode=mode,
                    surrogate=surrogate, tol=tol,
                    soc_targets=np.full(nc, soc_target), active=active, t0=t_now)
                y = traj.y[-1]
                t_now = traj.t[-1]
                if status == "target":
                    t_cell[ev] = t_now
                    active[ev] = 0.0
                else:
                    break
        except SimulationValidityError as exc:
            raise ProtocolError(f"protocol left the valid state region: {exc}",
                                cycle=icyc) from exc
        if active.any():
            raise ProtocolError("cycle did not reach the SOC target for all cells "
                                f"within {t_max_cycle:.0f}s", cycle=icyc)
        final = unpack_states(y, layout_for(mod, hf))
        l_now = np.array([s.l_sei for s in final])
        q_now = np.array([s.q_ah for s in final])
        records.append(CycleRecord(
            cycle=icyc + 1, charge_time=float(np.nanmax(t_cell)),
            t_cell=t_cell.copy(), q_ah=q_now.copy(), l_sei=l_now.copy(),
            dq_loss_pct=(q_nom - q_now) / q_nom * 100.0))
        if rest_policy.startswith("rest:"):
            pass  # thermal rest is implicit in the per-cycle re-initialization
    return records


def write_cycle_csv(records, path, n_cell):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["cycle", "charge_time"]
        for k in range(1, n_cell + 1):
            header += [f"tf_{k}", f"Lsei_{k}", f"Q_{k}", f"dQloss_{k}_pct"]
        w.writerow(header)
        for r in records:
            row = [r.cycle, f"{r.charge_time:.4f}"]
            for k in range(n_cell):
                row += [f"{r.t_cell[k]:.4f}", f"{r.l_sei[k]:.9g}",
                        f"{r.q_ah[k]:.9g}", f"{r.dq_loss_pct[k]:.9g}"]
            w.writerow(row)
