"""Primal-dual interior-point solver for the transcribed programs.

Monotone Fiacco-McCormick outer loop (barrier parameter shrinks by a fixed
factor once the perturbed KKT system is solved to a multiple of mu), damped
Newton steps on the primal-dual system with a Bunch-Kaufman factorization of
the reduced saddle matrix, inertia correction by escalating diagonal shifts,
fraction-to-the-boundary stepping, and a backtracking line search on an
l1-penalty merit function.  Deterministic: identical inputs produce the
identical iterate sequence.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import get_lapack_funcs

from .exceptions import EvaluationError
from .nlp import KktResiduals, NlpProblem, kkt_residuals

OPTIMAL = "optimal"
MAX_ITER = "max-iter"
INFEASIBLE = "infeasible-detected"
LINE_SEARCH_FAILURE = "line-search-failure"


@dataclass(frozen=True, eq=False)
class SolverOptions:
    tol_kkt: float = 1e-6
    mu0: float = 0.1
    mu_reduce: float = 0.2
    max_iter: int = 500
    armijo: float = 1e-4
    backtrack: float = 0.5
    delta_w0: float = 1e-8        # inertia-correction seed, escalates x10
    delta_w_max: float = 1e10
    tau_boundary: float = 0.995
    kappa_eps: float = 100.0      # inner loop: solve barrier KKT to kappa_eps*mu
    mu_min: float = 1e-14
    bfgs_reset_on_mu: bool = True
    hessian: str = "hybrid"       # "hybrid" | "fd" | "bfgs" | "identity"
    hess_switch_tol: float = 5e-3  # hybrid: switch from scaled identity to FD
    hess_refresh: int = 30        # FD-Hessian refresh period (accepted steps)
    fd_step: float = 1e-6
    bfgs_mode: str = "always"     # BFGS pair acceptance policy when hessian="bfgs"
    bfgs_late_threshold: float = 1e-2

    def validate(self):
        assert 0 < self.mu_reduce < 1
        assert min(self.tol_kkt, self.mu0, self.armijo, self.backtrack) > 0
        return self


@dataclass(eq=False)
class NlpSolution:
    p_star: np.ndarray
    mu1: np.ndarray               # equality multipliers
    mu2: np.ndarray               # inequality multipliers (>= 0 at optimal)
    z_lower: np.ndarray
    z_upper: np.ndarray
    kkt: KktResiduals
    status: str
    iterations: int
    objective: float
    wall_time: float
    iter_log: list = field(default_factory=list)
    cost: object = None           # per-term breakdown, filled by the harness

    def log_csv(self, path):
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "mu", "objective", "primal", "dual",
                        "complementarity", "step_length"])
            for row in self.iter_log:
                w.writerow(row)


def _push_interior(x, lb, ub):
    x = x.copy()
    span = ub - lb
    for i in range(x.size):
        lo, hi = lb[i], ub[i]
        if np.isfinite(lo) and np.isfinite(hi):
            pad = min(1e-2 * max(1.0, abs(lo)), 0.25 * span[i])
            x[i] = min(max(x[i], lo + pad), hi - min(1e-2 * max(1.0, abs(hi)),
                                                     0.25 * span[i]))
        elif np.isfinite(lo):
            x[i] = max(x[i], lo + 1e-2 * max(1.0, abs(lo)))
        elif np.isfinite(hi):
            x[i] = min(x[i], hi - 1e-2 * max(1.0, abs(hi)))
    return x


def _inertia(ldu, ipiv, n):
    """(positive, negative, zero) eigenvalue counts of a sytrf factorization."""
    pos = neg = zero = 0
    k = 0
    while k < n:
        if ipiv[k] >= 0:
            d = ldu[k, k]
            if d > 0:
                pos += 1
            elif d < 0:
                neg += 1
            else:
                zero += 1
            k += 1
        else:
            a, b, c = ldu[k, k], ldu[k, k + 1], ldu[k + 1, k + 1]
            det = a * c - b * b
            tr = a + c
            if det < 0:
                pos += 1
                neg += 1
            elif det > 0:
                if tr > 0:
                    pos += 2
                else:
                    neg += 2
            else:
                zero += 1
                pos += 1 if tr > 0 else 0
                neg += 1 if tr < 0 else 0
            k += 2
    return pos, neg, zero


def _alpha_ftb(v, dv, tau):
    """Largest alpha in (0, 1] with v + alpha*dv >= (1 - tau) * v (v > 0)."""
    mask = dv < 0
    if not np.any(mask):
        return 1.0
    return float(min(1.0, np.min(-tau * v[mask] / dv[mask])))


def solve(nlp: NlpProblem, options: SolverOptions = SolverOptions(),
          initial_guess=None) -> NlpSolution:
    """Minimize the NLP; returns the point, multipliers and certified
    residuals.  Status 'optimal' means every KKT residual is at or below
    options.tol_kkt."""
    import os
    debug_every = int(os.environ.get("PACKCHARGE_IP_DEBUG", "0"))
    options.validate()
    t_start = time.perf_counter()
    n = nlp.n
    lb, ub = nlp.lb, nlp.ub
    has_lb = np.isfinite(lb)
    has_ub = np.isfinite(ub)

    x = np.asarray(nlp.x0 if initial_guess is None else initial_guess, dtype=float)
    x = _push_interior(x, lb, ub)

    f = nlp.f(x)
    g = nlp.grad(x)
    ce = nlp.ceq(x)
    ci = nlp.cin(x)
    je = nlp.jaceq(x)
    ji = nlp.jacin(x)
    if not (np.isfinite(f) and np.all(np.isfinite(g)) and np.all(np.isfinite(ce))
            and np.all(np.isfinite(ci))):
        bad = int(np.argmax(~np.isfinite(np.concatenate([ce, ci])))) \
            if not (np.all(np.isfinite(ce)) and np.all(np.isfinite(ci))) else None
        raise EvaluationError("model evaluation produced non-finite values at the "
                              "initial point", constraint_index=bad)
    m1, m2 = ce.size, ci.size

    mu = options.mu0
    s = np.maximum(-ci, 1e-2)
    z = mu / s
    y = np.zeros(m1)
    zl = np.where(has_lb, mu / np.maximum(x - lb, 1e-10), 0.0)
    zu = np.where(has_ub, mu / np.maximum(ub - x, 1e-10), 0.0)

    w_bfgs = np.eye(n)
    sigma = 1.0
    bfgs_started = False
    last_refresh = -10**9
    rho = 10.0

    def gradL(p):
        gl = nlp.grad(p)
        if m1:
            gl = gl + nlp.jaceq(p).T @ y
        if m2:
            gl = gl + nlp.jacin(p).T @ z
        return gl

    def fd_hessian(p):
        """Forward-difference Lagrangian Hessian at fixed multipliers."""
        g0 = gradL(p)
        h = np.empty((n, n))
        for j in range(n):
            step = options.fd_step * max(1.0, abs(p[j]))
            pj = p.copy()
            pj[j] += step
            h[:, j] = (gradL(pj) - g0) / step
        return 0.5 * (h + h.T)
    status = MAX_ITER
    it = 0
    log = []
    sytrf, sytrs = get_lapack_funcs(("sytrf", "sytrs"), (np.empty((2, 2)),))

    def barrier_residual(mu_val):
        """Max norm of the mu-perturbed KKT system at the current iterate."""
        r_d = g + (je.T @ y if m1 else 0.0) + (ji.T @ z if m2 else 0.0) - zl + zu
        e = float(np.max(np.abs(r_d))) if n else 0.0
        if m1:
            e = max(e, float(np.max(np.abs(ce))))
        if m2:
            e = max(e, float(np.max(np.abs(ci + s))))
            e = max(e, float(np.max(np.abs(s * z - mu_val))))
        if has_lb.any():
            e = max(e, float(np.max(np.abs((x - lb)[has_lb] * zl[has_lb] - mu_val))))
        if has_ub.any():
            e = max(e, float(np.max(np.abs((ub - x)[has_ub] * zu[has_ub] - mu_val))))
        return e

    def merit(fv, cev, civ, sv, xv):
        bar = 0.0
        if m2:
            bar -= mu * np.sum(np.log(sv))
        if has_lb.any():
            bar -= mu * np.sum(np.log((xv - lb)[has_lb]))
        if has_ub.any():
            bar -= mu * np.sum(np.log((ub - xv)[has_ub]))
        theta = (np.sum(np.abs(cev)) if m1 else 0.0) \
            + (np.sum(np.abs(civ + sv)) if m2 else 0.0)
        return fv + bar + rho * theta, theta

    while it < options.max_iter:
        kr = kkt_residuals(nlp, x, y, z, zl, zu)
        if kr.within(options.tol_kkt):
            status = OPTIMAL
            break

        # barrier sub-convergence -> shrink mu (monotone decrease; the
        # superlinear branch takes over once mu is small)
        mu_changed = False
        while barrier_residual(mu) <= options.kappa_eps * mu and mu > options.mu_min:
            mu = max(min(options.mu_reduce * mu, mu ** 1.5), options.mu_min)
            mu_changed = True
        endgame = options.hessian == "fd" or (
            options.hessian == "hybrid"
            and kr.max_residual() <= options.hess_switch_tol)
        if endgame:
            if last_refresh < 0 or (mu_changed and it - last_refresh >= 5)                     or it - last_refresh >= options.hess_refresh:
                w_bfgs = fd_hessian(x)
                last_refresh = it
        elif mu_changed and options.bfgs_reset_on_mu and not bfgs_started:
            w_bfgs = sigma * np.eye(n)

        # assemble reduced system
        sl = np.where(has_lb, zl / np.maximum(x - lb, 1e-300), 0.0)
        su = np.where(has_ub, zu / np.maximum(ub - x, 1e-300), 0.0)
        r_d = g + (je.T @ y if m1 else 0.0) + (ji.T @ z if m2 else 0.0) - zl + zu
        rhs_x = -r_d
        rhs_x += np.where(has_lb, mu / np.maximum(x - lb, 1e-300) - zl, 0.0)
        rhs_x -= np.where(has_ub, mu / np.maximum(ub - x, 1e-300) - zu, 0.0)
        if m2:
            d_in = z / s
            r_i = ci + s
            rhs_x -= ji.T @ ((mu / s - z) + d_in * r_i)
            gram = nlp.gram_ineq(d_in, ji)
        else:
            gram = 0.0

        if options.hessian == "identity"                 or (options.hessian == "hybrid" and not endgame) or (
                options.hessian == "bfgs" and (
                    options.bfgs_mode == "never"
                    or (options.bfgs_mode == "late" and not bfgs_started))):
            w_bfgs = sigma * np.eye(n)
        delta_w = 0.0
        delta_c = 0.0
        trial = options.delta_w0
        while True:
            h = w_bfgs + np.diag(sl + su) + gram
            if delta_w:
                h = h + delta_w * np.eye(n)
            kdim = n + m1
            kmat = np.zeros((kdim, kdim))
            kmat[:n, :n] = h
            if m1:
                kmat[:n, n:] = je.T
                kmat[n:, :n] = je
                if delta_c:
                    kmat[n:, n:] = -delta_c * np.eye(m1)
            ldu, ipiv, info = sytrf(kmat, lower=1)
            if info == 0:
                pos, neg, zero = _inertia(ldu, ipiv, kdim)
                if pos == n and neg == m1 and zero == 0:
                    break
            # wrong inertia or singular: regularize and retry
            if delta_c == 0.0 and m1:
                delta_c = 1e-8 * max(1.0, mu)
            delta_w = trial
            trial *= 10.0
            if delta_w > options.delta_w_max:
                status = LINE_SEARCH_FAILURE
                break
        if status == LINE_SEARCH_FAILURE:
            break

        rhs = np.concatenate([rhs_x, -ce]) if m1 else rhs_x
        sol = sytrs(ldu, ipiv, rhs.reshape(-1, 1), lower=1)[0].ravel()
        dx = sol[:n]
        dy = sol[n:] if m1 else np.zeros(0)
        if m2:
            ds = -r_i - ji @ dx
            dz = (mu / s - z) + d_in * (r_i + ji @ dx)
        else:
            ds = dz = np.zeros(0)
        dzl = np.where(has_lb, (mu / np.maximum(x - lb, 1e-300) - zl) - sl * dx, 0.0)
        dzu = np.where(has_ub, (mu / np.maximum(ub - x, 1e-300) - zu) + su * dx, 0.0)

        # fraction to the boundary
        tau = options.tau_boundary
        alpha_p = 1.0
        if m2:
            alpha_p = min(alpha_p, _alpha_ftb(s, ds, tau))
        if has_lb.any():
            alpha_p = min(alpha_p, _alpha_ftb((x - lb)[has_lb], dx[has_lb], tau))
        if has_ub.any():
            alpha_p = min(alpha_p, _alpha_ftb((ub - x)[has_ub], -dx[has_ub], tau))
        alpha_d = 1.0
        if m2:
            alpha_d = min(alpha_d, _alpha_ftb(z, dz, tau))
        if has_lb.any():
            alpha_d = min(alpha_d, _alpha_ftb(zl[has_lb], dzl[has_lb], tau))
        if has_ub.any():
            alpha_d = min(alpha_d, _alpha_ftb(zu[has_ub], dzu[has_ub], tau))

        # penalty weight large enough for a descent direction
        theta0 = (np.sum(np.abs(ce)) if m1 else 0.0) + (np.sum(np.abs(ci + s)) if m2 else 0.0)
        g_bar = g - np.where(has_lb, mu / np.maximum(x - lb, 1e-300), 0.0) \
            + np.where(has_ub, mu / np.maximum(ub - x, 1e-300), 0.0)
        d_dir = float(g_bar @ dx)
        if m2:
            d_dir += float(-(mu / s) @ ds)
        if theta0 > 1e-6:
            rho_needed = (d_dir + 1e-8) / ((1.0 - 0.5) * theta0)
            if rho_needed > rho:
                rho = min(1e12, 2.0 * rho_needed)
        d_phi = d_dir - rho * theta0

        phi0, _ = merit(f, ce, ci, s, x)
        alpha = alpha_p
        accepted = False
        soc_tried = False
        soc_used = False
        f_t = ce_t = ci_t = None
        while alpha > 1e-14:
            x_t = x + alpha * dx
            s_t = s + alpha * ds if m2 else s
            try:
                f_t = nlp.f(x_t)
                ce_t = nlp.ceq(x_t)
                ci_t = nlp.cin(x_t)
            except FloatingPointError:
                f_t = np.nan
            phi_t = np.nan
            if np.isfinite(f_t) and np.all(np.isfinite(ce_t)) and np.all(np.isfinite(ci_t)):
                phi_t, _ = merit(f_t, ce_t, ci_t, s_t, x_t)
                if phi_t <= phi0 + options.armijo * alpha * min(d_phi, 0.0):
                    accepted = True
                    break
                if not soc_tried and np.isfinite(phi_t):
                    # second-order correction: cancel the quadratic growth of
                    # the constraint violation at the trial point (reuses the
                    # factorization; defeats the Maratos effect on the
                    # curved defect manifold)
                    soc_tried = True
                    rhs_soc = np.zeros(n + m1)
                    if m2:
                        r_i_t = ci_t + s_t
                        rhs_soc[:n] = -ji.T @ (d_in * r_i_t)
                    if m1:
                        rhs_soc[n:] = -ce_t
                    cor = sytrs(ldu, ipiv, rhs_soc.reshape(-1, 1), lower=1)[0].ravel()
                    dxc = alpha * dx + cor[:n]
                    dsc = alpha * ds - (ci_t + s_t) - ji @ cor[:n] if m2 else ds
                    a2 = 1.0
                    if m2:
                        a2 = min(a2, _alpha_ftb(s, dsc, tau))
                    if has_lb.any():
                        a2 = min(a2, _alpha_ftb((x - lb)[has_lb], dxc[has_lb], tau))
                    if has_ub.any():
                        a2 = min(a2, _alpha_ftb((ub - x)[has_ub], -dxc[has_ub], tau))
                    x_c = x + a2 * dxc
                    s_c = s + a2 * dsc if m2 else s
                    try:
                        f_c = nlp.f(x_c)
                        ce_c = nlp.ceq(x_c)
                        ci_c = nlp.cin(x_c)
                    except FloatingPointError:
                        f_c = np.nan
                    if np.isfinite(f_c) and np.all(np.isfinite(ce_c)) \
                            and np.all(np.isfinite(ci_c)):
                        phi_c, _ = merit(f_c, ce_c, ci_c, s_c, x_c)
                        if phi_c <= phi0 + options.armijo * alpha * min(d_phi, 0.0):
                            accepted = True
                            soc_used = True
                            x_t, s_t = x_c, s_c
                            f_t, ce_t, ci_t = f_c, ce_c, ci_c
                            break
            alpha *= options.backtrack
        if not accepted:
            status = LINE_SEARCH_FAILURE
            break

        x_old, g_old, je_old, ji_old = x, g, je, ji
        x = x_t
        if m2:
            s = s_t
            z = np.maximum(z + alpha_d * dz, 1e-16)
        if m1:
            y = y + alpha_d * dy
        zl = np.where(has_lb, np.maximum(zl + alpha_d * dzl, 1e-16), 0.0)
        zu = np.where(has_ub, np.maximum(zu + alpha_d * dzu, 1e-16), 0.0)

        f, ce, ci = f_t, ce_t, ci_t
        g = nlp.grad(x)
        je = nlp.jaceq(x)
        ji = nlp.jacin(x)
        kr = kkt_residuals(nlp, x, y, z, zl, zu)

        # damped BFGS on the Lagrangian (multipliers frozen across the pair)
        do_update = options.hessian == "bfgs" and (not soc_used) and alpha >= 0.05 and (
            options.bfgs_mode == "always" or (
                options.bfgs_mode == "late"
                and kr.max_residual() <= options.bfgs_late_threshold))
        s_v = x - x_old
        yv = (g - g_old)
        if m1:
            yv = yv + (je - je_old).T @ y
        if m2:
            yv = yv + (ji - ji_old).T @ z
        sn = float(s_v @ s_v)
        if sn > 1e-24:
            sy_meas = float(s_v @ yv)
            if sy_meas > 1e-16 * sn:
                # running Shanno-Phua curvature scale of the Lagrangian
                sigma = min(max(sy_meas / sn, 1e-3), 1e4)
        if sn > 1e-24 and options.bfgs_mode != "never" and do_update:
            sy0 = float(s_v @ yv)
            if not bfgs_started and sy0 > 1e-16 * sn:
                w_bfgs = sigma * np.eye(n)
                bfgs_started = True
            ws = w_bfgs @ s_v
            sws = float(s_v @ ws)
            sy = float(s_v @ yv)
            if sy < 0.2 * sws:
                theta_d = (0.8 * sws) / (sws - sy)
                yv = theta_d * yv + (1.0 - theta_d) * ws
                sy = float(s_v @ yv)
            if sy > 1e-16 * max(1.0, sws):
                w_bfgs = w_bfgs - np.outer(ws, ws) / sws + np.outer(yv, yv) / sy

        it += 1
        log.append([it, f"{mu:.6e}", f"{f:.9e}", f"{kr.primal:.3e}",
                    f"{kr.dual:.3e}", f"{kr.complementarity:.3e}", f"{alpha:.3e}"])
        if debug_every and it % debug_every == 0:
            print(f"    it {it:4d} mu {mu:.1e} stat {kr.stationarity:.2e} "
                  f"prim {kr.primal:.2e} comp {kr.complementarity:.2e} "
                  f"a_max {alpha_p:.2e} a {alpha:.2e} rho {rho:.1e} dw {delta_w:.1e} "
                  f"|dx| {np.max(np.abs(dx)):.2e}")

    kr = kkt_residuals(nlp, x, y, z, zl, zu)
    if status == MAX_ITER and kr.within(options.tol_kkt):
        status = OPTIMAL
    return NlpSolution(p_star=x, mu1=y, mu2=z, z_lower=zl, z_upper=zu, kkt=kr,
                       status=status, iterations=it, objective=f,
                       wall_time=time.perf_counter() - t_start, iter_log=log)


def certify(nlp: NlpProblem, solution: NlpSolution, tol: float = 1e-6) -> dict:
    """Independent optimality evidence: re-evaluate the four KKT conditions
    with fresh gradient evaluations at the reported point."""
    kr = kkt_residuals(nlp, solution.p_star, solution.mu1, solution.mu2,
                       solution.z_lower, solution.z_upper)
    report = {
        "stationarity": {"residual": kr.stationarity, "pass": kr.stationarity <= tol},
        "primal_feasibility": {"residual": kr.primal, "pass": kr.primal <= tol},
        "dual_feasibility": {"residual": kr.dual_violation,
                             "min_multiplier": kr.dual,
                             "pass": kr.dual_violation <= tol},
        "complementary_slackness": {"residual": kr.complementarity,
                                    "pass": kr.complementarity <= tol},
        "tolerance": tol,
    }
    report["all_pass"] = all(v["pass"] for k, v in report.items()
                             if isinstance(v, dict))
    return report
