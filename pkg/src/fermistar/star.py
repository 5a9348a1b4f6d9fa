"""Poisson bracket, the star products *_K, intertwiners and SO(V,q) action.

All bidifferential operators are evaluated in the doubled algebra: the first
slot holds the left factor, the second slot the right factor, and slot
derivatives carry their Koszul signs automatically.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from gmpy2 import mpq

from . import _bits
from .forms import Bivector, Metric, Rotation
from .multivector import (
    DimensionError,
    DoubledMultivector,
    ModeError,
    Multivector,
    _check_pair,
    diagonal_pullback,
    fermi_derivative,
    linear_substitution,
    signed_derivative,
    slot_derivative,
    tensor_embed,
    wedge,
)
from .scalars import GaussianRational, Laurent, exact

__all__ = [
    "poisson_bracket",
    "hamiltonian_field",
    "apply_vector_field",
    "star_k",
    "star_k_reference",
    "intertwiner",
    "o_transport",
    "so_action_function",
    "hbar_scalar",
    "second_order_operator",
]


def _entry(matrix: np.ndarray, i: int, j: int, formal: bool):
    v = matrix[i, j]
    return v if formal else complex(v)


def _check_metric(f: Multivector, metric: Metric):
    if metric.m != f.m:
        raise DimensionError(f"metric is {metric.m}-dimensional, multivector has m={f.m}")


def hbar_scalar(f: Multivector, factor, hbar: float | None = None):
    """The scalar factor*hbar: formal Laurent or a complex number."""
    if f.formal:
        if hbar is not None:
            raise ModeError("formal mode uses a symbolic hbar; do not pass a value")
        return Laurent.hbar(1) * factor
    h = f.hbar if hbar is None else float(hbar)
    if hbar is not None and h != f.hbar:
        raise ModeError(f"hbar={h} does not match the operands' hbar={f.hbar}")
    return complex(factor) * h


def _half(f: Multivector):
    return Fraction(1, 2) if f.formal else 0.5


def hamiltonian_field(f: Multivector, metric: Metric) -> list[Multivector]:
    """Coefficients c^nu = q^{mu nu} d'_mu f of the Hamiltonian vector field."""
    _check_metric(f, metric)
    qs = metric.qsharp_exact if f.formal else metric.qsharp
    derivs = [signed_derivative(mu, f) for mu in range(1, f.m + 1)]
    out = []
    for nu in range(f.m):
        c = f.like_zero()
        for mu in range(f.m):
            w = _entry(qs, mu, nu, f.formal)
            if w != 0 and not derivs[mu].is_zero():
                c = c + derivs[mu] * w
        out.append(c)
    return out


def apply_vector_field(coeffs: list[Multivector], g: Multivector) -> Multivector:
    """sum_nu c^nu ∧ d_nu g."""
    total = g.like_zero()
    for nu, c in enumerate(coeffs, start=1):
        if not c.is_zero():
            total = total + wedge(c, fermi_derivative(nu, g))
    return total


def poisson_bracket(f: Multivector, g: Multivector, metric: Metric) -> Multivector:
    """{f, g} = 1/2 q^{mu nu} d'_mu f ∧ d_nu g."""
    _check_pair(f, g)
    _check_metric(f, metric)
    return apply_vector_field(hamiltonian_field(f, metric), g) * _half(f)


# ------------------------------------------------------------------ star


def _lambda(metric: Metric, K: Bivector | None, formal: bool) -> np.ndarray:
    if K is None:
        K = Bivector.zero(metric.m)
    if K.m != metric.m:
        raise DimensionError("bivector and metric sizes differ")
    return K.lam(metric, formal=formal)


def _contract_second_slot(F: DoubledMultivector, row: np.ndarray, formal: bool) -> DoubledMultivector:
    """sum_nu row[nu] (1 ⊗ d_nu) F."""
    m = F.base_m
    total = F.like_zero()
    for nu in range(m):
        w = row[nu] if formal else complex(row[nu])
        if w != 0:
            total = total + slot_derivative(2, nu + 1, F) * w
    return total


def _exp_bidifferential(F: DoubledMultivector, lam: np.ndarray, c, method: str) -> DoubledMultivector:
    """exp(c * Lambda^{mu nu} d_mu ⊗ d_nu) applied to a doubled element."""
    m = F.base_m
    formal = F.formal
    if method == "product":
        # Y_mu = d_mu ⊗ (Lambda^{mu nu} d_nu) are even, commute and square to zero,
        # so the exponential factorises as prod_mu (1 + c Y_mu).
        for mu in range(m):
            G = _contract_second_slot(F, lam[mu], formal)
            if G.is_zero():
                continue
            G = slot_derivative(1, mu + 1, G)
            F = F + G * c
        return F
    if method == "series":
        total = F
        term = F
        for k in range(1, m + 1):
            nxt = F.like_zero()
            for mu in range(m):
                G = _contract_second_slot(term, lam[mu], formal)
                if not G.is_zero():
                    nxt = nxt + slot_derivative(1, mu + 1, G)
            if nxt.is_zero():
                break
            term = nxt
            coef = c ** k * (Fraction(1, math.factorial(k)) if formal else 1.0 / math.factorial(k))
            total = total + term * coef
        return total
    raise ValueError(f"unknown method {method!r}")


def star_k(f: Multivector, g: Multivector, metric: Metric, K: Bivector | None = None,
           hbar: float | None = None, method: str = "product") -> Multivector:
    """f *_K g = Δ^*(exp(-(hbar/4) Lambda^{mu nu} d_mu ⊗ d_nu) f ⊗ g).

    ``method="product"`` uses the factorised exponential, ``"series"`` the
    truncated power series; both act on the doubled algebra.
    """
    _check_pair(f, g)
    _check_metric(f, metric)
    lam = _lambda(metric, K, f.formal)
    c = hbar_scalar(f, Fraction(-1, 4) if f.formal else -0.25, hbar)
    if f.formal and method == "product":
        fast = _star_integer(f, g, lam)
        return fast if fast is not None else _star_product_sparse(f, g, lam)
    F = tensor_embed(f, g)
    return diagonal_pullback(_exp_bidifferential(F, lam, c, method))


def _star_product_sparse(f: Multivector, g: Multivector, lam: np.ndarray) -> Multivector:
    """Factorised exponential on a sparse term list (formal mode).

    Terms are keyed by (hbar power, first-slot mask, second-slot mask); the
    arithmetic is the same as in the dense doubled algebra, but only nonzero
    terms are visited, which keeps exact arithmetic affordable at m = 6.
    """
    m = f.m
    quarter = GaussianRational(Fraction(-1, 4))
    terms: dict[tuple[int, int, int], object] = {}
    for (ia, A) in zip(*np.nonzero(_nonzero_rows(f))):
        a = f.data[ia, A]
        for (ib, B) in zip(*np.nonzero(_nonzero_rows(g))):
            key = (f.lo + g.lo + int(ia) + int(ib), int(A), int(B))
            terms[key] = terms.get(key, 0) + a * g.data[ib, B]
    for mu in range(m):
        bit_mu = 1 << mu
        # weights -Lambda^{mu nu}/4 with both signs precomputed
        row = []
        for nu in range(m):
            if lam[mu, nu] != 0:
                w = exact(lam[mu, nu]) * quarter
                row.append((1 << nu, w, -w))
        new: dict[tuple[int, int, int], object] = {}
        for (p, A, B), v in terms.items():
            if not A & bit_mu or not v:
                continue
            # (1 ⊗ d_nu) passes the first slot: (-1)^(|A| + #B below nu);
            # then d_mu on the first slot: (-1)^(#A below mu)
            base = A.bit_count() + (A & (bit_mu - 1)).bit_count()
            A2 = A ^ bit_mu
            for bit_nu, wpos, wneg in row:
                if not B & bit_nu:
                    continue
                s = base + (B & (bit_nu - 1)).bit_count()
                val = v * (wneg if s & 1 else wpos)
                key = (p + 1, A2, B ^ bit_nu)
                new[key] = new.get(key, 0) + val
        for key, val in new.items():
            terms[key] = terms.get(key, 0) + val
    out: dict[tuple[int, int], object] = {}
    for (p, A, B), v in terms.items():
        if not v or A & B:
            continue
        inv = sum((B & ((1 << i) - 1)).bit_count() for i in range(m) if A >> i & 1)
        key = (p, A | B)
        out[key] = out.get(key, 0) + (-v if inv & 1 else v)
    layered = {}
    for (p, mask), v in out.items():
        if v:
            layered.setdefault(mask, {})[p] = v
    return Multivector.from_masks(m, {mask: Laurent(d) for mask, d in layered.items()}, formal=True)


_INT_LIMIT = 2 ** 62


def _scaled_integers(values) -> tuple[np.ndarray, np.ndarray, int] | None:
    """Gaussian-rational array as (re, im, D) with integer arrays re + i im = D * values."""
    flat = [exact(v) for v in np.ravel(values)]
    den = 1
    for v in flat:
        if v:
            den = math.lcm(den, int(v.re.denominator), int(v.im.denominator))
    re = np.zeros(len(flat), dtype=object)
    im = np.zeros(len(flat), dtype=object)
    for k, v in enumerate(flat):
        if v:
            re[k] = int(v.re * den)
            im[k] = int(v.im * den)
    shape = np.shape(values)
    return re.reshape(shape), im.reshape(shape), den


@lru_cache(maxsize=None)
def _contraction_signs(m: int, mu: int, nu: int) -> np.ndarray:
    """Koszul signs of d_mu ⊗ d_nu on the split grid (hiB, loB, hiA, loA).

    A mask with bit mu set is hiA * 2^(mu+1) + 2^mu + loA (likewise B with
    nu); the sign is (-1)^(|A| + #A below mu + #B below nu).
    """
    pc = _bits.popcount(m)
    hiA, loA = np.meshgrid(np.arange(1 << (m - 1 - mu)), np.arange(1 << mu), indexing="ij")
    A = (hiA << (mu + 1)) | (1 << mu) | loA
    hiB, loB = np.meshgrid(np.arange(1 << (m - 1 - nu)), np.arange(1 << nu), indexing="ij")
    B = (hiB << (nu + 1)) | (1 << nu) | loB
    pa = (pc[A] + pc[A & ((1 << mu) - 1)]) & 1
    pb = pc[B & ((1 << nu) - 1)] & 1
    parity = pb[:, :, None, None] + pa[None, None, :, :]
    return (1 - 2 * (parity & 1)).astype(np.int64)


@lru_cache(maxsize=None)
def _pullback_table(m: int):
    """For disjoint (B, A): flat index B * 2^m + A, target A | B and reordering sign."""
    idx = np.arange(1 << m)
    B, A = np.meshgrid(idx, idx, indexing="ij")
    ok = (A & B) == 0
    inv = _bits.wedge_sign_parity(A, B, m)
    flat = (B * (1 << m) + A)[ok]
    return flat, (A | B)[ok], (1 - 2 * (inv[ok] & 1)).astype(np.int64)


def _star_integer(f: Multivector, g: Multivector, lam: np.ndarray) -> Multivector | None:
    """Exact *_K in int64 arithmetic after clearing denominators.

    The product is bilinear, so each pair of hbar layers of f and g is
    handled separately; contraction order k contributes hbar^k times
    (-1/(4 D_lam))^k.  Returns None when an a priori L1 bound does not fit
    in 63 bits, in which case the caller uses exact object arithmetic.
    """
    m = f.m
    if m > 8:
        return None
    L = _scaled_integers(lam)
    Fs = _scaled_integers(f.data)
    Gs = _scaled_integers(g.data)
    lre, lim, dlam = L
    fre, fim, df = Fs
    gre, gim, dg = Gs
    row_norm = [1 + sum(abs(int(lre[mu, nu])) + abs(int(lim[mu, nu])) for nu in range(m))
                for mu in range(m)]
    growth = math.prod(row_norm)
    n = 1 << m
    f_norm = [int(sum(abs(int(x)) for x in fre[i]) + sum(abs(int(x)) for x in fim[i]))
              for i in range(f.data.shape[0])]
    g_norm = [int(sum(abs(int(x)) for x in gre[j]) + sum(abs(int(x)) for x in gim[j]))
              for j in range(g.data.shape[0])]
    pairs = [(i, j) for i in range(len(f_norm)) for j in range(len(g_norm))
             if f_norm[i] and g_norm[j]]
    if not pairs:
        return Multivector.zero(m, formal=True)
    if max(f_norm[i] * g_norm[j] for i, j in pairs) * growth >= _INT_LIMIT:
        return None
    # axes: (layer pair, contraction order k, B, A)
    shape = (len(pairs), m + 1, n, n)
    re = np.zeros(shape, dtype=np.int64)
    im = np.zeros(shape, dtype=np.int64)
    for t, (i, j) in enumerate(pairs):
        a_re, a_im = fre[i].astype(np.int64), fim[i].astype(np.int64)
        b_re, b_im = gre[j].astype(np.int64), gim[j].astype(np.int64)
        re[t, 0] = np.outer(b_re, a_re) - np.outer(b_im, a_im)
        im[t, 0] = np.outer(b_re, a_im) + np.outer(b_im, a_re)
    for mu in range(m):
        new_re = np.zeros_like(re)
        new_im = np.zeros_like(im)
        for nu in range(m):
            wr, wi = int(lre[mu, nu]), int(lim[mu, nu])
            if wr == 0 and wi == 0:
                continue
            split = (len(pairs), m + 1, n >> (nu + 1), 2, 1 << nu, n >> (mu + 1), 2, 1 << mu)
            src_re = re.reshape(split)[:, :m, :, 1, :, :, 1, :]
            src_im = im.reshape(split)[:, :m, :, 1, :, :, 1, :]
            sign = _contraction_signs(m, mu, nu)
            blk_re = src_re * sign
            blk_im = src_im * sign
            new_re.reshape(split)[:, 1:, :, 0, :, :, 0, :] += wr * blk_re - wi * blk_im
            new_im.reshape(split)[:, 1:, :, 0, :, :, 0, :] += wr * blk_im + wi * blk_re
        re += new_re
        im += new_im
    flat, target, psign = _pullback_table(m)
    acc_re = np.zeros((len(pairs), m + 1, n), dtype=np.int64)
    acc_im = np.zeros((len(pairs), m + 1, n), dtype=np.int64)
    sel_re = psign * re.reshape(len(pairs), m + 1, n * n)[:, :, flat]
    sel_im = psign * im.reshape(len(pairs), m + 1, n * n)[:, :, flat]
    np.add.at(acc_re, (slice(None), slice(None), target), sel_re)
    np.add.at(acc_im, (slice(None), slice(None), target), sel_im)
    out: dict[int, list] = {}
    for t, (i, j) in enumerate(pairs):
        for k in range(m + 1):
            nz = np.nonzero(acc_re[t, k] | acc_im[t, k])[0]
            if not len(nz):
                continue
            den = df * dg * (4 * dlam) ** k
            scale = -1 if k % 2 else 1
            layer = out.setdefault(f.lo + g.lo + i + j + k, [0] * n)
            for mask in nz:
                c = GaussianRational._make(mpq(scale * int(acc_re[t, k, mask]), den),
                                           mpq(scale * int(acc_im[t, k, mask]), den))
                layer[mask] = layer[mask] + c
    if not out:
        return Multivector.zero(m, formal=True)
    lo = min(out)
    data = np.zeros((max(out) - lo + 1, n), dtype=object)
    for p, layer in out.items():
        data[p - lo] = layer
    return Multivector(m, data, lo, None)


def _nonzero_rows(f: Multivector) -> np.ndarray:
    from .multivector import _nonzero_mask
    return _nonzero_mask(f.data)


def star_k_reference(f: Multivector, g: Multivector, metric: Metric, K: Bivector | None = None,
                     hbar: float | None = None) -> Multivector:
    """Independent *_K built from index tuples with explicit Koszul signs.

    The order-k term is (c^k/k!) sum over (mu_1..mu_k, nu_1..nu_k) of
    prod Lambda^{mu_j nu_j} * s * (d_mu... f) ∧ (d_nu... g), where passing the
    j-th right-slot derivative across the left factor of current degree
    |f| - j + 1 contributes (-1)^(|f| - j + 1).  Only single-space
    derivatives and wedges are used.
    """
    _check_pair(f, g)
    _check_metric(f, metric)
    formal = f.formal
    lam = _lambda(metric, K, formal)
    c = hbar_scalar(f, Fraction(-1, 4) if formal else -0.25, hbar)
    m = f.m
    total = f.like_zero()
    for d in sorted(f.degrees()):
        fd = f.grade(d)
        states = [(1, fd, g)]
        total = total + wedge(fd, g)
        for k in range(1, m + 1):
            new_states = []
            order_k = f.like_zero()
            koszul = -1 if (d - k + 1) % 2 else 1
            for coef, fp, gp in states:
                for mu in range(m):
                    dfp = fermi_derivative(mu + 1, fp)
                    if dfp.is_zero():
                        continue
                    for nu in range(m):
                        w = _entry(lam, mu, nu, formal)
                        if w == 0:
                            continue
                        dgp = fermi_derivative(nu + 1, gp)
                        if dgp.is_zero():
                            continue
                        w = coef * w * koszul
                        new_states.append((w, dfp, dgp))
                        order_k = order_k + wedge(dfp, dgp) * w
            if not new_states:
                break
            states = new_states
            fact = Fraction(1, math.factorial(k)) if formal else 1.0 / math.factorial(k)
            total = total + order_k * (c ** k * fact)
    return total


# ------------------------------------------------------------- intertwiners


def second_order_operator(f: Multivector, B: np.ndarray, formal: bool | None = None) -> Multivector:
    """sum_{mu nu} B^{mu nu} d_mu d_nu f."""
    formal = f.formal if formal is None else formal
    total = f.like_zero()
    for nu in range(f.m):
        dnu = fermi_derivative(nu + 1, f)
        if dnu.is_zero():
            continue
        for mu in range(f.m):
            w = _entry(B, mu, nu, formal)
            if w != 0:
                total = total + fermi_derivative(mu + 1, dnu) * w
    return total


def intertwiner(K: Bivector, K_new: Bivector, f: Multivector, hbar: float | None = None) -> Multivector:
    """U^O_{K_new, K} f = exp(-(hbar/8)(K_new - K)^{mu nu} d_mu d_nu) f."""
    if K.m != f.m or K_new.m != f.m:
        raise DimensionError("bivector size does not match the multivector")
    D = (K_new - K).exact if f.formal else (K_new.numeric - K.numeric)
    c = hbar_scalar(f, Fraction(-1, 8) if f.formal else -0.125, hbar)
    total = f
    term = f
    for k in range(1, f.m // 2 + 1):
        term = second_order_operator(term, D)
        if term.is_zero():
            break
        fact = Fraction(1, math.factorial(k)) if f.formal else 1.0 / math.factorial(k)
        total = total + term * (c ** k * fact)
    return total


def o_transport(path, f: Multivector, hbar: float | None = None) -> Multivector:
    """Parallel transport of the flat connection along a sequence of bivectors."""
    path = list(path)
    if not path:
        raise ValueError("transport needs a nonempty path")
    for K0, K1 in zip(path[:-1], path[1:]):
        f = intertwiner(K0, K1, f, hbar)
    return f


# ----------------------------------------------------------- SO(V,q) action


def so_action_function(gamma: Rotation, f: Multivector) -> Multivector:
    """gamma^O(f) = f ∘ gamma^{-1}: theta^mu -> (gamma^{-1})^mu_nu theta^nu."""
    if not isinstance(gamma, Rotation):
        raise TypeError("expected a Rotation")
    if gamma.m != f.m:
        raise DimensionError("rotation size does not match the multivector")
    inv = gamma.inverse_exact if f.formal else gamma.inverse_matrix
    return linear_substitution(f, inv)
