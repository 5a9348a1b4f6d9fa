"""Clifford algebra Cl(V, q), quantisation maps Q_K and the symbol map.

Clifford elements use the ordered monomial basis
theta_hat^{mu1} ... theta_hat^{mup} (mu1 < ... < mup) with the same bitmask
encoding as :class:`~fermistar.multivector.Multivector`.  The relation is

    theta_hat^mu theta_hat^nu + theta_hat^nu theta_hat^mu = (hbar/2) q^{mu nu},

so every product reduces to the basis with corrections carrying one power of
hbar per contracted pair.  In formal mode hbar stays symbolic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _bits
from .forms import Bivector, Metric, Rotation
from .multivector import (
    DimensionError,
    ModeError,
    Multivector,
    _check_pair,
    _derivative_data,
    _nonzero_mask,
    _zeros,
    fermi_derivative,
)
from .scalars import GaussianRational, Laurent, exact
from .star import hbar_scalar, intertwiner

__all__ = [
    "CliffordElement",
    "CliffordAlgebra",
    "clifford_mul",
    "graded_commutator",
    "parity",
    "varrho0_apply",
    "quantize",
    "symbol",
    "supertrace",
    "clifford_derivative",
    "inner_derivative",
    "so_action_clifford",
]


class CliffordElement(Multivector):
    """Element of Cl(V, q) in the ordered monomial basis."""

    __slots__ = ()
    algebra = "clifford"

    @classmethod
    def from_multivector(cls, f: Multivector) -> CliffordElement:
        """Reinterpret the coefficients of ``f`` on the ordered Clifford basis."""
        return cls(f.m, f.data, f.lo, f.hbar)

    def as_multivector(self) -> Multivector:
        """Same coefficients read as a Grassmann element (no symbol map)."""
        return Multivector(self.m, self.data, self.lo, self.hbar)

    @classmethod
    def from_json(cls, obj: dict) -> CliffordElement:
        return cls.from_multivector(Multivector.from_json({**obj, "algebra": "grassmann"}))


@dataclass(frozen=True)
class _GenTable:
    """Multiplication of basis monomials by one generator.

    order-0 part: out[tgt0] += (-1)^neg0 * x[src0]
    order-1 part: out[tgt1] += hbar * w1 * x[src1], w1 built from q^sharp / 4
    """

    src0: np.ndarray
    tgt0: np.ndarray
    neg0: np.ndarray
    src1: np.ndarray
    tgt1: np.ndarray
    w1_numeric: np.ndarray
    w1_exact: np.ndarray


def _generator_table(m: int, b: int, qsharp_num, qsharp_exact, side: str) -> _GenTable:
    src0, tgt0, neg0 = [], [], []
    src1, tgt1, wn, we = [], [], [], []
    bit_b = 1 << b
    quarter = Fraction(1, 4)

    def add1(src, tgt, sign, factor, a):
        src1.append(src)
        tgt1.append(tgt)
        wn.append(sign * factor * qsharp_num[a, b] / 4)
        val = qsharp_exact[a, b]
        we.append(exact(val * (sign * factor)) * quarter if val != 0 else 0)

    for A in range(1 << m):
        if side == "right":
            passed = bin(A >> (b + 1)).count("1")
        else:
            passed = bin(A & (bit_b - 1)).count("1")
        sign = -1 if passed & 1 else 1
        if A & bit_b:
            add1(A, A ^ bit_b, sign, 1, b)
        else:
            src0.append(A)
            tgt0.append(A | bit_b)
            neg0.append(sign < 0)
        for a in range(m):
            bit_a = 1 << a
            if not A & bit_a or a == b:
                continue
            if side == "right" and a > b:
                after = bin(A >> (a + 1)).count("1")
            elif side == "left" and a < b:
                after = bin(A & (bit_a - 1)).count("1")
            else:
                continue
            add1(A, A ^ bit_a, -1 if after & 1 else 1, 2, a)
    as_int = lambda v: np.array(v, dtype=np.int64)
    we_arr = np.empty(len(we), dtype=object)
    we_arr[:] = we
    return _GenTable(as_int(src0), as_int(tgt0), np.array(neg0, dtype=bool),
                     as_int(src1), as_int(tgt1), np.array(wn, dtype=np.complex128), we_arr)


class CliffordAlgebra:
    """Multiplication tables of Cl(V, q) for a fixed metric."""

    def __init__(self, metric: Metric):
        self.metric = metric
        self.m = metric.m
        qn = metric.qsharp
        qe = metric.qsharp_exact
        self.right = [_generator_table(self.m, b, qn, qe, "right") for b in range(self.m)]
        self.left = [_generator_table(self.m, b, qn, qe, "left") for b in range(self.m)]

    def _apply(self, table: _GenTable, data: np.ndarray, hbar) -> np.ndarray:
        formal = data.dtype == object
        P, n = data.shape
        if not formal:
            out = np.zeros((1, n), dtype=np.complex128)
            out[0, table.tgt0] = np.where(table.neg0, -1.0, 1.0) * data[0, table.src0]
            np.add.at(out[0], table.tgt1, hbar * table.w1_numeric * data[0, table.src1])
            return out
        out = _zeros(P + 1, n, True)
        vals = data[:, table.src0].copy()
        if table.neg0.any():
            vals[:, table.neg0] = -vals[:, table.neg0]
        out[:P, table.tgt0] = vals
        live = _nonzero_mask(data[:, table.src1]).any(axis=0)
        if live.any():
            src, tgt, w = table.src1[live], table.tgt1[live], table.w1_exact[live]
            for p in range(P):
                np.add.at(out[p + 1], tgt, data[p, src] * w)
        return out

    def right_generator(self, x: CliffordElement, mu: int) -> CliffordElement:
        """x theta_hat^mu."""
        data = self._apply(self.right[mu - 1], x.data, x.hbar)
        return CliffordElement(x.m, data, x.lo, x.hbar)

    def left_generator(self, x: CliffordElement, mu: int) -> CliffordElement:
        """theta_hat^mu x."""
        data = self._apply(self.left[mu - 1], x.data, x.hbar)
        return CliffordElement(x.m, data, x.lo, x.hbar)

    def right_linear(self, x: CliffordElement, vec) -> CliffordElement:
        """x (sum_mu vec[mu] theta_hat^mu)."""
        total = x.like_zero()
        for mu, c in enumerate(vec, start=1):
            if c != 0:
                total = total + self.right_generator(x, mu) * c
        return total

    def left_linear(self, x: CliffordElement, vec) -> CliffordElement:
        total = x.like_zero()
        for mu, c in enumerate(vec, start=1):
            if c != 0:
                total = total + self.left_generator(x, mu) * c
        return total

    def mul(self, x: CliffordElement, y: CliffordElement) -> CliffordElement:
        _check_pair(x, y)
        if x.m != self.m:
            raise DimensionError("element and metric sizes differ")
        total = x.like_zero()
        cache = {0: x}
        for B in y.support():
            B = int(B)
            chain = []
            mask = B
            while mask not in cache:
                chain.append(mask)
                mask &= ~(1 << (mask.bit_length() - 1))
            for mask in reversed(chain):
                top = mask.bit_length()
                cache[mask] = self.right_generator(cache[mask & ~(1 << (top - 1))], top)
            total = total + cache[B] * y.coefficient(B)
        return CliffordElement(total.m, total.data, total.lo, total.hbar)


@lru_cache(maxsize=64)
def _algebra(metric: Metric) -> CliffordAlgebra:
    return CliffordAlgebra(metric)


def algebra_for(metric: Metric) -> CliffordAlgebra:
    return _algebra(metric)


def _as_clifford(x) -> CliffordElement:
    if isinstance(x, CliffordElement):
        return x
    if isinstance(x, Multivector):
        raise TypeError("expected a CliffordElement; use CliffordElement.from_multivector "
                        "to reinterpret a Grassmann element")
    raise TypeError(f"expected a CliffordElement, got {type(x).__name__}")


def _check_hbar(x: Multivector, hbar):
    if hbar is not None:
        if x.formal:
            raise ModeError("formal mode uses a symbolic hbar")
        if float(hbar) != x.hbar:
            raise ModeError(f"hbar={hbar} does not match the element's hbar={x.hbar}")


def clifford_mul(x: CliffordElement, y: CliffordElement, metric: Metric,
                 hbar: float | None = None) -> CliffordElement:
    """Product in Cl(V, q) reduced to the ordered basis."""
    x, y = _as_clifford(x), _as_clifford(y)
    _check_hbar(x, hbar)
    return algebra_for(metric).mul(x, y)


def parity(x: CliffordElement) -> CliffordElement:
    """The parity automorphism (-1)^{|x|}."""
    odd = (_bits.popcount(x.m) & 1) == 1
    data = x.data.copy()
    if x.formal:
        data[:, odd] = -data[:, odd]
    else:
        data[:, odd] *= -1
    return type(x)(x.m, data, x.lo, x.hbar)


def graded_commutator(x: CliffordElement, y: CliffordElement, metric: Metric) -> CliffordElement:
    """[x, y] = xy - (-1)^{|x||y|} yx, extended bilinearly over parity parts."""
    total = x.like_zero()
    for xp in (x.even_part(), x.odd_part()):
        for yp in (y.even_part(), y.odd_part()):
            if xp.is_zero() or yp.is_zero():
                continue
            sign = -1 if (xp.parity() and yp.parity()) else 1
            total = total + clifford_mul(xp, yp, metric) - clifford_mul(yp, xp, metric) * sign
    return CliffordElement(total.m, total.data, total.lo, total.hbar)


def _varrho_generator(alg: CliffordAlgebra, mu: int, x: CliffordElement) -> CliffordElement:
    """varrho_0(theta^mu) x = 1/2 (theta_hat^mu x + (-1)^{|x|} x theta_hat^mu)."""
    half = Fraction(1, 2) if x.formal else 0.5
    return (alg.left_generator(x, mu) + alg.right_generator(parity(x), mu)) * half


def varrho0_apply(f: Multivector, x: CliffordElement, metric: Metric,
                  hbar: float | None = None) -> CliffordElement:
    """varrho_0(f) x, multiplicative in f: varrho_0(f ∧ g) = varrho_0(f) ∘ varrho_0(g)."""
    x = _as_clifford(x)
    if f.formal != x.formal or f.m != x.m:
        raise DimensionError("function and Clifford element are incompatible")
    _check_hbar(x, hbar)
    alg = algebra_for(metric)
    cache = {0: x}
    total = x.like_zero()
    for A in f.support():
        A = int(A)
        chain = []
        mask = A
        while mask not in cache:
            chain.append(mask)
            mask &= mask - 1
        for mask in reversed(chain):
            low = (mask & -mask).bit_length()
            cache[mask] = _varrho_generator(alg, low, cache[mask & (mask - 1)])
        total = total + cache[A] * f.coefficient(A)
    return CliffordElement(total.m, total.data, total.lo, total.hbar)


def _unit(f: Multivector) -> CliffordElement:
    return CliffordElement.scalar(1, f.m, formal=f.formal, hbar=f.hbar or 1.0)


def quantize(f: Multivector, K: Bivector | None, metric: Metric,
             hbar: float | None = None) -> CliffordElement:
    """Q_K(f) = varrho_0(U^O_{0,K} f) 1."""
    if K is None:
        K = Bivector.zero(f.m)
    g = intertwiner(K, Bivector.zero(f.m), f, hbar)
    return varrho0_apply(g, _unit(f), metric, hbar)


def symbol(x: CliffordElement, K: Bivector | None, metric: Metric,
           hbar: float | None = None) -> Multivector:
    """Inverse of Q_K by back-substitution (Q_K is unipotent in degree)."""
    x = _as_clifford(x)
    residual = x
    masks = sorted(range(1 << x.m), key=lambda a: -bin(a).count("1"))
    out = {}
    for A in masks:
        c = residual.coefficient(A)
        if (not x.formal and c == 0) or (x.formal and not c):
            continue
        out[A] = c
        mono = Multivector.from_masks(x.m, {A: 1}, formal=x.formal, hbar=x.hbar or 1.0)
        residual = residual - quantize(mono, K, metric, hbar) * c
    return Multivector.from_masks(x.m, out, formal=x.formal, hbar=x.hbar or 1.0)


def supertrace(x: CliffordElement, hbar: float | None = None):
    """(i hbar/2)^n times the top coefficient; zero on all shorter monomials."""
    x = _as_clifford(x)
    if x.m % 2:
        raise DimensionError("the supertrace needs an even number of generators")
    n = x.m // 2
    top = x.coefficient((1 << x.m) - 1)
    if x.formal:
        factor = GaussianRational(1)
        for _ in range(n):
            factor = factor * GaussianRational(0, Fraction(1, 2))
        return top * Laurent([factor], n)
    h = x.hbar if hbar is None else float(hbar)
    return top * (0.5j * h) ** n


def clifford_derivative(mu: int, x: CliffordElement) -> CliffordElement:
    """The super-derivation d_mu on Cl: acts on ordered monomials like d/dtheta^mu."""
    x = _as_clifford(x)
    return CliffordElement(x.m, _derivative_data(x.data, x.m, mu - 1), x.lo, x.hbar)


def inner_derivative(mu: int, x: CliffordElement, metric: Metric) -> CliffordElement:
    """(2/hbar) ad_{iota_mu q} x, the inner form of d_mu."""
    x = _as_clifford(x)
    qrow = metric.q_exact[mu - 1] if x.formal else metric.numeric[mu - 1]
    a = CliffordElement.linear(list(qrow), x.m, formal=x.formal, hbar=x.hbar or 1.0)
    comm = graded_commutator(a, x, metric)
    if x.formal:
        return comm.shift_hbar(-1) * 2
    return comm * (2.0 / x.hbar)


def so_action_clifford(gamma: Rotation, x: CliffordElement, metric: Metric | None = None) -> CliffordElement:
    """Automorphism with gamma^C(theta_hat^mu) = (gamma^{-1})^mu_nu theta_hat^nu."""
    x = _as_clifford(x)
    if not isinstance(gamma, Rotation):
        raise TypeError("expected a Rotation")
    if gamma.m != x.m:
        raise DimensionError("rotation size does not match the element")
    metric = metric or gamma.metric or Metric.identity(x.m)
    alg = algebra_for(metric)
    inv = gamma.inverse_exact if x.formal else gamma.inverse_matrix
    cache = {0: _unit(x)}
    total = x.like_zero()
    for A in x.support():
        A = int(A)
        chain = []
        mask = A
        while mask not in cache:
            chain.append(mask)
            mask &= ~(1 << (mask.bit_length() - 1))
        for mask in reversed(chain):
            top = mask.bit_length()
            row = inv[top - 1]
            cache[mask] = alg.right_linear(cache[mask & ~(1 << (top - 1))], list(row))
        total = total + cache[A] * x.coefficient(A)
    return CliffordElement(total.m, total.data, total.lo, total.hbar)
