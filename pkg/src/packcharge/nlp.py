"""Finite nonlinear program container and KKT residual evaluation.

    min f(P)   s.t.  c_eq(P) = 0,   c_in(P) <= 0,   lb <= P <= ub

Jacobians are dense.  `gram_ineq` returns J_in^T diag(d) J_in; problems with
structured inequality Jacobians (the collocation transcription) override it
with a cheaper accumulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NlpProblem:
    def __init__(self, n, f, grad, ceq=None, jaceq=None, cin=None, jacin=None,
                 lb=None, ub=None, x0=None, name="nlp"):
        self.n = n
        self.name = name
        self._f, self._grad = f, grad
        self._ceq, self._jaceq = ceq, jaceq
        self._cin, self._jacin = cin, jacin
        self.lb = np.full(n, -np.inf) if lb is None else np.asarray(lb, dtype=float)
        self.ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float)
        self.x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)

    # -- evaluation ------------------------------------------------------------

    def f(self, p):
        return float(self._f(p))

    def grad(self, p):
        return np.asarray(self._grad(p), dtype=float)

    def ceq(self, p):
        if self._ceq is None:
            return np.zeros(0)
        return np.atleast_1d(np.asarray(self._ceq(p), dtype=float))

    def jaceq(self, p):
        if self._jaceq is None:
            return np.zeros((0, self.n))
        return np.atleast_2d(np.asarray(self._jaceq(p), dtype=float))

    def cin(self, p):
        if self._cin is None:
            return np.zeros(0)
        return np.atleast_1d(np.asarray(self._cin(p), dtype=float))

    def jacin(self, p):
        if self._jacin is None:
            return np.zeros((0, self.n))
        return np.atleast_2d(np.asarray(self._jacin(p), dtype=float))

    def gram_ineq(self, d, jacin):
        """J_in^T diag(d) J_in for the current inequality Jacobian."""
        if jacin.shape[0] == 0:
            return np.zeros((self.n, self.n))
        return (jacin * d[:, None]).T @ jacin

    def describe(self, path=None) -> str:
        m1 = self.ceq(self.x0).size
        m2 = self.cin(self.x0).size
        nb = int(np.sum(np.isfinite(self.lb)) + np.sum(np.isfinite(self.ub)))
        je = self.jaceq(self.x0)
        ji = self.jacin(self.x0)
        lines = [
            f"NLP {self.name}",
            f"  variables            : {self.n}",
            f"  equality constraints : {m1}",
            f"  inequality constraints: {m2}",
            f"  finite variable bounds: {nb}",
            f"  eq-jacobian nnz      : {int(np.count_nonzero(je))} "
            f"({np.count_nonzero(je) / max(1, je.size):.4f} dense)",
            f"  in-jacobian nnz      : {int(np.count_nonzero(ji))} "
            f"({np.count_nonzero(ji) / max(1, ji.size):.4f} dense)",
            f"  bounds lb in [{np.min(self.lb):.3g}, {np.max(self.lb):.3g}]",
            f"  bounds ub in [{np.min(self.ub):.3g}, {np.max(self.ub):.3g}]",
            "  scaled initial guess:",
            "    " + np.array2string(self.x0, precision=4, threshold=40),
        ]
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


@dataclass(frozen=True)
class KktResiduals:
    stationarity: float       # max-norm of the Lagrangian gradient
    primal: float             # max constraint violation
    dual: float               # smallest inequality/bound multiplier
    complementarity: float    # max |mu * c| over inequalities and bounds

    @property
    def dual_violation(self) -> float:
        return max(0.0, -self.dual)

    def max_residual(self) -> float:
        return max(self.stationarity, self.primal, self.dual_violation,
                   self.complementarity)

    def within(self, tol: float) -> bool:
        return self.max_residual() <= tol

    def as_dict(self):
        return {"stationarity": self.stationarity, "primal": self.primal,
                "dual": self.dual, "complementarity": self.complementarity}


def kkt_residuals(nlp: NlpProblem, p, mu1, mu2, z_lower=None, z_upper=None) -> KktResiduals:
    """The four first-order optimality residuals at (p, multipliers).

    Bound multipliers default to zero (pure equality/inequality problems);
    inactive-bound complementarity then vanishes by convention.
    """
    p = np.asarray(p, dtype=float)
    mu1 = np.zeros(0) if mu1 is None else np.atleast_1d(np.asarray(mu1, dtype=float))
    mu2 = np.zeros(0) if mu2 is None else np.atleast_1d(np.asarray(mu2, dtype=float))
    g = nlp.grad(p).copy()
    if mu1.size:
        g += nlp.jaceq(p).T @ mu1
    if mu2.size:
        g += nlp.jacin(p).T @ mu2
    if z_lower is not None:
        g -= z_lower
    if z_upper is not None:
        g += z_upper
    stationarity = float(np.max(np.abs(g))) if g.size else 0.0

    ceq = nlp.ceq(p)
    cin = nlp.cin(p)
    primal = 0.0
    if ceq.size:
        primal = max(primal, float(np.max(np.abs(ceq))))
    if cin.size:
        primal = max(primal, float(np.max(np.maximum(cin, 0.0))))
    lo_viol = np.maximum(nlp.lb - p, 0.0)
    hi_viol = np.maximum(p - nlp.ub, 0.0)
    primal = max(primal, float(np.max(lo_viol, initial=0.0)),
                 float(np.max(hi_viol, initial=0.0)))

    dual = np.inf
    comp = 0.0
    if mu2.size:
        dual = min(dual, float(np.min(mu2)))
        comp = max(comp, float(np.max(np.abs(mu2 * cin))))
    for z, gap in ((z_lower, p - nlp.lb), (z_upper, nlp.ub - p)):
        if z is not None and z.size:
            finite = np.isfinite(gap)
            if finite.any():
                dual = min(dual, float(np.min(z[finite]))) if z[finite].size else dual
                comp = max(comp, float(np.max(np.abs(z[finite] * gap[finite]))))
    if not np.isfinite(dual):
        dual = 0.0
    return KktResiduals(stationarity=stationarity, primal=primal, dual=dual,
                        complementarity=comp)
