"""Vectorized forward-mode dual numbers.

A Dual carries a float array `val` of shape S and a tangent array `tan` of
shape S + (K,), i.e. K directional derivatives propagated simultaneously.
Model right-hand sides are written against the small facade at the bottom of
this module (exp, sqrt, asinh, ...), so the same code runs on plain float
arrays (fast path) and on duals (gradient path).

Only the operations the dynamics actually use are implemented; anything with
a genuine branch (min/max/abs) is deliberately absent so that non-smoothness
cannot sneak into the transcription unnoticed.
"""

from __future__ import annotations

import numpy as np


def _const_factor(c):
    """Prepare a constant operand for multiplying a tangent array."""
    if np.isscalar(c):
        return c
    return np.asarray(c)[..., None]


class Dual:
    __slots__ = ("val", "tan")
    __array_ufunc__ = None      # force numpy to defer to our reflected operators

    def __init__(self, val, tan):
        self.val = np.asarray(val, dtype=float)
        self.tan = np.asarray(tan, dtype=float)

    # -- construction -------------------------------------------------------

    @classmethod
    def seed(cls, val, offset, width):
        """Dual whose components are independent seeds offset..offset+n in a
        tangent space of total dimension `width`."""
        val = np.asarray(val, dtype=float)
        n = val.shape[-1] if val.ndim else 1
        tan = np.zeros(val.shape + (width,))
        idx = np.arange(n)
        tan[..., idx, offset + idx] = 1.0
        return cls(val, tan)

    @classmethod
    def constant(cls, val, width):
        val = np.asarray(val, dtype=float)
        return cls(val, np.zeros(val.shape + (width,)))

    @property
    def width(self):
        return self.tan.shape[-1]

    @property
    def shape(self):
        return self.val.shape

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.tan + other.tan)
        val = self.val + other
        tan = self.tan
        if val.shape != self.val.shape:
            tan = np.broadcast_to(tan, val.shape + (self.width,))
        return Dual(val, tan)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.tan)

    def __sub__(self, other):
        return self.__add__(-other if isinstance(other, Dual) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val,
                        self.val[..., None] * other.tan + other.val[..., None] * self.tan)
        return Dual(self.val * other, _const_factor(other) * self.tan)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            v = self.val * inv
            return Dual(v, (self.tan - v[..., None] * other.tan) * inv[..., None])
        inv = 1.0 / np.asarray(other, dtype=float)
        return Dual(self.val * inv, _const_factor(inv) * self.tan)

    def __rtruediv__(self, other):
        inv = 1.0 / self.val
        v = other * inv
        return Dual(v, -_const_factor(v * inv) * self.tan)

    def __pow__(self, p):
        if not np.isscalar(p):
            raise TypeError("dual ** dual is not supported")
        v = self.val ** p
        return Dual(v, (p * self.val ** (p - 1))[..., None] * self.tan)

    # -- structure ----------------------------------------------------------

    def __getitem__(self, key):
        if key is Ellipsis or (isinstance(key, tuple) and Ellipsis in key):
            raise TypeError("Ellipsis indexing of duals is not supported")
        return Dual(self.val[key], self.tan[key])

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Dual(self.val.reshape(shape), self.tan.reshape(shape + (self.width,)))

    def sum(self, axis):
        axis = axis % self.val.ndim
        return Dual(self.val.sum(axis=axis), self.tan.sum(axis=axis))


def value_of(x):
    return x.val if isinstance(x, Dual) else x


def _unary(x, f, dfdx):
    if isinstance(x, Dual):
        return Dual(f(x.val), dfdx(x.val)[..., None] * x.tan)
    return f(x)


def exp(x):
    return _unary(x, np.exp, np.exp)


def log(x):
    return _unary(x, np.log, lambda v: 1.0 / v)


def sqrt(x):
    return _unary(x, np.sqrt, lambda v: 0.5 / np.sqrt(v))


def asinh(x):
    return _unary(x, np.arcsinh, lambda v: 1.0 / np.sqrt(1.0 + v * v))


def tanh(x):
    return _unary(x, np.tanh, lambda v: 1.0 / np.cosh(v) ** 2)


def slice_last(x, start, stop):
    """x[..., start:stop] over the value shape (duals keep tangents)."""
    if isinstance(x, Dual):
        return Dual(x.val[..., start:stop], x.tan[..., start:stop, :])
    return np.asarray(x)[..., start:stop]


def take(x, idx, axis):
    """Index one position along `axis` of the value shape (duals keep tangents)."""
    if isinstance(x, Dual):
        axis = axis % x.val.ndim
        return Dual(np.take(x.val, idx, axis=axis), np.take(x.tan, idx, axis=axis))
    x = np.asarray(x)
    return np.take(x, idx, axis=axis % x.ndim)


def apply_matrix(mat, x):
    """mat @ x over the last axis of x, mat a constant (m, n) array."""
    if isinstance(x, Dual):
        return Dual(np.einsum("mn,...n->...m", mat, x.val),
                    np.einsum("mn,...nk->...mk", mat, x.tan))
    return np.einsum("mn,...n->...m", mat, x)


def dot(w, x):
    """Constant-weight contraction over the last axis of x."""
    if isinstance(x, Dual):
        return Dual(np.einsum("n,...n->...", w, x.val),
                    np.einsum("n,...nk->...k", w, x.tan))
    return np.einsum("n,...n->...", w, x)


def concat(parts, axis):
    if any(isinstance(p, Dual) for p in parts):
        width = next(p.width for p in parts if isinstance(p, Dual))
        parts = [p if isinstance(p, Dual) else Dual.constant(p, width) for p in parts]
        nd = parts[0].val.ndim
        axis = axis % nd
        return Dual(np.concatenate([p.val for p in parts], axis=axis),
                    np.concatenate([p.tan for p in parts], axis=axis))
    return np.concatenate(parts, axis=axis)


def stack(parts, axis):
    if any(isinstance(p, Dual) for p in parts):
        width = next(p.width for p in parts if isinstance(p, Dual))
        parts = [p if isinstance(p, Dual) else Dual.constant(p, width) for p in parts]
        nd = parts[0].val.ndim + 1
        axis = axis % nd
        return Dual(np.stack([p.val for p in parts], axis=axis),
                    np.stack([p.tan for p in parts], axis=axis))
    return np.stack(parts, axis=axis)


def smoothstep(u):
    """C^2 quintic smoothstep: 0 for u<=0, 1 for u>=1, 6u^5-15u^4+10u^3 between.

    The quintic has zero first and second derivatives at both edges, so the
    value-based branching below is derivative-consistent.
    """
    if isinstance(u, Dual):
        uv = np.clip(u.val, 0.0, 1.0)
        inside = ((u.val > 0.0) & (u.val < 1.0)).astype(float)
        s = uv ** 3 * (10.0 + uv * (-15.0 + 6.0 * uv))
        ds = 30.0 * uv ** 2 * (uv - 1.0) ** 2 * inside
        return Dual(s, ds[..., None] * u.tan)
    uv = np.clip(u, 0.0, 1.0)
    return uv ** 3 * (10.0 + uv * (-15.0 + 6.0 * uv))


def smoothmax(x, sharpness):
    """Smooth upper bound of the entries of x: log-sum-exp with given sharpness.

    Exceeds the true maximum by at most log(n)/sharpness; smooth at ties.
    """
    xv = value_of(x)
    shift = float(np.max(xv))
    z = exp((x - shift) * sharpness)
    zs = z.sum(-1) if isinstance(z, Dual) else z.sum(axis=-1)
    return shift + log(zs) / sharpness
