"""Truncated multivariate Taylor jets in four variables.

A :class:`Jet` of order ``N`` stores the normalized Taylor coefficients
``d^alpha f / alpha!`` for every multi-index ``alpha`` of total degree at most
``N``, for a whole batch of expansion points at once.  Coefficients are laid
out degree-major, so a lower-order jet is a prefix of a higher-order one.

Jets take part in numpy ufunc dispatch: ``np.sin(jet)``, ``jet * array`` and
similar expressions return jets, which lets chart maps and basis functions be
written once and evaluated either on plain arrays or on jets.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

NVARS = 4
MAX_ORDER = 4


def _build_monomials() -> list[tuple[int, ...]]:
    monos: list[tuple[int, ...]] = []
    for deg in range(MAX_ORDER + 1):
        block = [m for m in itertools.product(range(deg + 1), repeat=NVARS) if sum(m) == deg]
        block.sort(reverse=True)
        monos.extend(block)
    return monos


MONOMIALS = _build_monomials()
MONO_INDEX = {m: i for i, m in enumerate(MONOMIALS)}
N_MONO = [sum(1 for m in MONOMIALS if sum(m) <= n) for n in range(MAX_ORDER + 1)]


@lru_cache(maxsize=None)
def _product_table(order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    triples = []
    for i, ma in enumerate(MONOMIALS[: N_MONO[order]]):
        for j, mb in enumerate(MONOMIALS[: N_MONO[order]]):
            if sum(ma) + sum(mb) <= order:
                k = MONO_INDEX[tuple(x + y for x, y in zip(ma, mb))]
                triples.append((k, i, j))
    triples.sort()
    arr = np.array(triples, dtype=np.intp)
    ks = arr[:, 0]
    starts = np.flatnonzero(np.r_[True, ks[1:] != ks[:-1]])
    return arr[:, 1], arr[:, 2], starts


@lru_cache(maxsize=None)
def _deriv_table(order: int, var: int) -> tuple[np.ndarray, np.ndarray]:
    """Map an order-``order`` jet onto its ``var`` partial (order - 1)."""
    src, fac = [], []
    for m in MONOMIALS[: N_MONO[order - 1]]:
        up = list(m)
        up[var] += 1
        src.append(MONO_INDEX[tuple(up)])
        fac.append(up[var])
    return np.array(src, dtype=np.intp), np.array(fac, dtype=float)


def _unit_index(var: int) -> int:
    e = [0] * NVARS
    e[var] = 1
    return MONO_INDEX[tuple(e)]


def _pair_index(i: int, j: int) -> int:
    e = [0] * NVARS
    e[i] += 1
    e[j] += 1
    return MONO_INDEX[tuple(e)]


class Jet:
    """Batch of truncated Taylor expansions in four variables."""

    __slots__ = ("c", "order")
    __array_priority__ = 1000

    def __init__(self, coeffs: np.ndarray, order: int):
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"jet order must lie in [0, {MAX_ORDER}], got {order}")
        coeffs = np.asarray(coeffs)
        if coeffs.shape[0] != N_MONO[order]:
            raise ValueError("coefficient array does not match jet order")
        self.c = coeffs
        self.order = order

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, order: int) -> Jet:
        value = np.asarray(value)
        c = np.zeros((N_MONO[order],) + value.shape, dtype=np.result_type(value, float))
        c[0] = value
        return cls(c, order)

    @classmethod
    def variables(cls, point, order: int) -> list[Jet]:
        """Seed the four coordinate jets ``p_k + dp_k`` at ``point`` (shape (4, ...))."""
        point = np.asarray(point, dtype=float)
        if point.shape[0] != NVARS:
            raise ValueError("a jet seed point needs four coordinates")
        out = []
        for k in range(NVARS):
            c = np.zeros((N_MONO[order],) + point.shape[1:])
            c[0] = point[k]
            if order >= 1:
                c[_unit_index(k)] = 1.0
            out.append(cls(c, order))
        return out

    # accessors ----------------------------------------------------------
    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.c.shape[1:]

    def grad(self, var: int) -> np.ndarray:
        return self.c[_unit_index(var)]

    def second(self, i: int, j: int) -> np.ndarray:
        """Second partial derivative d^2 f / dp_i dp_j at the expansion point."""
        v = self.c[_pair_index(i, j)]
        return 2.0 * v if i == j else v

    def truncate(self, order: int) -> Jet:
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        return Jet(self.c[: N_MONO[order]], order)

    def diff(self, var: int) -> Jet:
        if self.order == 0:
            raise ValueError("jet order exhausted: cannot differentiate an order-0 jet")
        src, fac = _deriv_table(self.order, var)
        fac = fac.reshape((-1,) + (1,) * (self.c.ndim - 1))
        return Jet(self.c[src] * fac, self.order - 1)

    def conj(self) -> Jet:
        return Jet(np.conj(self.c), self.order)

    @property
    def real(self) -> Jet:
        return Jet(np.real(self.c), self.order)

    @property
    def imag(self) -> Jet:
        return Jet(np.imag(self.c), self.order)

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> Jet | np.ndarray:
        if isinstance(other, Jet):
            return other
        return np.asarray(other)

    def __add__(self, other):
        other = self._coerce(other)
        if isinstance(other, Jet):
            n = min(self.order, other.order)
            return Jet(self.c[: N_MONO[n]] + other.c[: N_MONO[n]], n)
        c = self.c.astype(np.result_type(self.c, other), copy=True)
        c[0] = c[0] + other
        return Jet(c, self.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.order)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if isinstance(other, Jet):
            n = min(self.order, other.order)
            ia, ib, starts = _product_table(n)
            prod = self.c[ia] * other.c[ib]
            return Jet(np.add.reduceat(prod, starts, axis=0), n)
        return Jet(self.c * other, self.order)

    __rmul__ = __mul__

    def reciprocal(self) -> Jet:
        x0 = self.c[0]
        derivs = [(-1.0) ** k * math.factorial(k) / x0 ** (k + 1) for k in range(self.order + 1)]
        return self.compose(derivs)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet(self.c / np.asarray(other), self.order)

    def __rtruediv__(self, other):
        return self.reciprocal() * np.asarray(other)

    def __pow__(self, p):
        if isinstance(p, Jet):
            return (np.log(self) * p).exp()
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(np.ones_like(self.c[0]), self.order)
            base = self
            while p:
                if p & 1:
                    out = out * base
                p >>= 1
                if p:
                    base = base * base
            return out
        x0 = self.c[0]
        derivs = []
        coef = np.ones_like(np.asarray(p, dtype=complex if np.iscomplexobj(p) else float))
        for k in range(self.order + 1):
            derivs.append(coef * x0 ** (p - k))
            coef = coef * (p - k)
        return self.compose(derivs)

    # univariate composition --------------------------------------------
    def compose(self, derivs) -> Jet:
        """Return ``g(self)`` given ``derivs[k] = g^(k)(self.value)``."""
        n = self.order
        if len(derivs) < n + 1:
            raise ValueError("not enough derivatives supplied for the jet order")
        h = Jet(self.c.copy(), n)
        h.c[0] = 0.0
        d0 = np.asarray(derivs[0])
        shape = np.broadcast_shapes(d0.shape, self.batch_shape)
        out_c = np.zeros((N_MONO[n],) + shape, dtype=np.result_type(d0, self.c, *[np.asarray(d) for d in derivs[: n + 1]]))
        out_c[0] = d0
        out = Jet(out_c, n)
        power = None
        for k in range(1, n + 1):
            power = h if power is None else power * h
            out = out + power * (np.asarray(derivs[k]) / math.factorial(k))
        return out

    def exp(self) -> Jet:
        e = np.exp(self.c[0])
        return self.compose([e] * (self.order + 1))

    # numpy interop ------------------------------------------------------
    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs.get("out") is not None:
            return NotImplemented
        binary = {
            np.add: lambda a, b: a + b,
            np.subtract: lambda a, b: a - b,
            np.multiply: lambda a, b: a * b,
            np.true_divide: lambda a, b: a / b,
            np.power: lambda a, b: a ** b,
        }
        if ufunc in binary:
            a, b = inputs
            if isinstance(a, Jet):
                return binary[ufunc](a, b)
            if ufunc is np.add or ufunc is np.multiply:
                return binary[ufunc](b, a)
            if ufunc is np.subtract:
                return b.__rsub__(a)
            if ufunc is np.true_divide:
                return b.__rtruediv__(a)
            return NotImplemented
        (x,) = inputs
        x0 = x.c[0]
        n = x.order
        if ufunc is np.negative:
            return -x
        if ufunc is np.positive:
            return x
        if ufunc is np.exp:
            return x.exp()
        if ufunc is np.conjugate:
            return x.conj()
        if ufunc is np.log:
            d = [np.log(x0)] + [(-1.0) ** (k - 1) * math.factorial(k - 1) / x0**k for k in range(1, n + 1)]
            return x.compose(d)
        if ufunc in (np.sin, np.cos):
            s, c = np.sin(x0), np.cos(x0)
            cyc = [s, c, -s, -c] if ufunc is np.sin else [c, -s, -c, s]
            return x.compose([cyc[k % 4] for k in range(n + 1)])
        if ufunc in (np.sinh, np.cosh):
            s, c = np.sinh(x0), np.cosh(x0)
            cyc = [s, c] if ufunc is np.sinh else [c, s]
            return x.compose([cyc[k % 2] for k in range(n + 1)])
        if ufunc is np.tanh:
            return np.sinh(x) / np.cosh(x)
        if ufunc is np.sqrt:
            return x**0.5
        if ufunc is np.square:
            return x * x
        if ufunc is np.reciprocal:
            return x.reciprocal()
        return NotImplemented

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, batch={self.batch_shape})"


def seed(point, order: int) -> list[Jet]:
    """Convenience alias for :meth:`Jet.variables`."""
    return Jet.variables(point, order)


def as_jet(x, order: int) -> Jet:
    return x if isinstance(x, Jet) else Jet.constant(x, order)
