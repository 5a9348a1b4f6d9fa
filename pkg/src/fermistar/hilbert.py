"""Sections of the prequantum line bundle and polarised states.

Sections are numeric :class:`Multivector` objects in the fixed
trivialisation where the covariant derivative is
nabla_mu = d_mu - hbar^{-1} q_{mu nu} theta^nu ∧.  The value of hbar is the
one carried by the section.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _bits
from .forms import Metric, Rotation
from .multivector import (
    DimensionError,
    DoubledMultivector,
    ModeError,
    Multivector,
    diagonal_pullback,
    exp_even,
    linear_substitution,
    slot_derivative,
    tensor_embed,
    wedge,
)
from .polarization import Polarization, kp_lambda
from .star import so_action_function

__all__ = [
    "HilbertError",
    "PolarizedState",
    "derivative_matrix",
    "wedge_matrix",
    "nabla_matrix",
    "covariant_derivative",
    "prequantum_op",
    "gaussian_factor",
    "polarized_basis",
    "is_polarized",
    "polarization_residual",
    "decompose",
    "hermitian_pairing",
    "star_on_state",
    "so_action_section",
]


class HilbertError(ValueError):
    """Invalid input for a section or state operation."""


def _numeric(psi: Multivector) -> Multivector:
    if psi.formal:
        raise ModeError("sections need a numeric hbar (the Gaussian carries 1/hbar)")
    return psi


def _match(f: Multivector, psi: Multivector) -> Multivector:
    if f.m != psi.m:
        raise DimensionError("function and section live on different algebras")
    if f.formal:
        return f.evaluate(psi.hbar)
    return f.with_hbar(psi.hbar)


@lru_cache(maxsize=None)
def _derivative_matrix_cached(m: int, mu: int) -> np.ndarray:
    src, tgt, neg = _bits.derivative_table(m, mu - 1)
    D = np.zeros((1 << m, 1 << m))
    D[tgt, src] = np.where(neg, -1.0, 1.0)
    D.setflags(write=False)
    return D


def derivative_matrix(m: int, mu: int) -> np.ndarray:
    """Matrix of d/dtheta^mu on dense coefficient vectors."""
    return _derivative_matrix_cached(m, mu)


def wedge_matrix(m: int, coeffs) -> np.ndarray:
    """Matrix of left multiplication by sum_nu coeffs[nu] theta^nu."""
    out = np.zeros((1 << m, 1 << m), dtype=complex)
    for nu, c in enumerate(coeffs):
        if c != 0:
            out += c * derivative_matrix(m, nu + 1).T
    return out


def _as_vector(v, m: int) -> np.ndarray:
    if isinstance(v, (int, np.integer)):
        if not 1 <= v <= m:
            raise IndexError(f"generator index {v} out of range 1..{m}")
        e = np.zeros(m, dtype=complex)
        e[v - 1] = 1
        return e
    v = np.asarray(v, dtype=complex)
    if v.shape != (m,):
        raise DimensionError(f"direction must have length {m}")
    return v


def nabla_matrix(metric: Metric, hbar: float, v) -> np.ndarray:
    """Matrix of nabla_v = v^mu d_mu - hbar^{-1} (v^mu q_{mu nu}) theta^nu ∧."""
    m = metric.m
    v = _as_vector(v, m)
    out = np.zeros((1 << m, 1 << m), dtype=complex)
    for mu in range(m):
        if v[mu] != 0:
            out += v[mu] * derivative_matrix(m, mu + 1)
    return out - wedge_matrix(m, (v @ metric.numeric) / hbar)


def covariant_derivative(v, psi: Multivector, metric: Metric) -> Multivector:
    """nabla_v psi for a generator index (1-based) or a complex direction vector."""
    psi = _numeric(psi)
    if psi.m != metric.m:
        raise DimensionError("section and metric dimensions differ")
    N = nabla_matrix(metric, psi.hbar, v)
    return Multivector.from_vector(psi.m, N @ psi.vector, hbar=psi.hbar)


def _second_slot_nabla(F: DoubledMultivector, w: np.ndarray, metric: Metric, hbar: float):
    """(1 ⊗ nabla_w) on a doubled element, section in the second slot."""
    m = metric.m
    total = F.like_zero()
    for nu in range(m):
        if w[nu] != 0:
            total = total + slot_derivative(2, nu + 1, F) * complex(w[nu])
    a = (w @ metric.numeric) / hbar
    if np.any(a != 0):
        gauge = Multivector.linear(np.concatenate([np.zeros(m), a]), 2 * m, hbar=hbar)
        total = total - DoubledMultivector(2 * m, wedge(gauge, F).data, F.lo, F.hbar)
    return total


def _bidifferential_on_section(f: Multivector, psi: Multivector, lam: np.ndarray, c: float,
                               metric: Metric, method: str = "product") -> Multivector:
    """Delta^*(exp(c Lambda^{mu nu} d_mu ⊗ nabla_nu) f ⊗ psi)."""
    m = metric.m
    hbar = psi.hbar
    F = tensor_embed(f, psi)
    if method == "product":
        # the operators d_mu ⊗ nabla_{w_mu} commute and square to zero when the
        # w_mu span a q-isotropic subspace, so the exponential factorises
        for mu in range(m):
            G = _second_slot_nabla(F, lam[mu], metric, hbar)
            if G.is_zero():
                continue
            F = F + slot_derivative(1, mu + 1, G) * c
        return diagonal_pullback(F)
    if method == "series":
        total, term = F, F
        fact = 1.0
        for k in range(1, 2 * m + 1):
            nxt = F.like_zero()
            for mu in range(m):
                G = _second_slot_nabla(term, lam[mu], metric, hbar)
                if not G.is_zero():
                    nxt = nxt + slot_derivative(1, mu + 1, G)
            if nxt.is_zero():
                break
            term = nxt
            fact *= k
            total = total + term * (c ** k / fact)
        return diagonal_pullback(total)
    raise ValueError(f"unknown method {method!r}")


def prequantum_op(f: Multivector, psi: Multivector, metric: Metric) -> Multivector:
    """f^ psi = f ∧ psi + (hbar/2) nabla_{H_f} psi.

    Evaluated as f ∧ psi - (hbar/2) Delta^*(q^{mu nu} (d_mu ⊗ nabla_nu)(f ⊗ psi)),
    the one-derivative term of the state star product with Lambda replaced by
    2 q^sharp.
    """
    psi = _numeric(psi)
    f = _match(f, psi)
    hbar = psi.hbar
    F = tensor_embed(f, psi)
    qs = metric.qsharp
    acc = F.like_zero()
    for mu in range(metric.m):
        G = _second_slot_nabla(F, qs[mu], metric, hbar)
        if not G.is_zero():
            acc = acc + slot_derivative(1, mu + 1, G)
    return wedge(f, psi) - diagonal_pullback(acc) * (hbar / 2)


def star_on_state(f: Multivector, psi: Multivector, P: Polarization, *,
                  method: str = "product") -> Multivector:
    """f *_P psi = Delta^*(exp(-(hbar/4) Lambda_P^{mu nu} d_mu ⊗ nabla_nu) f ⊗ psi)."""
    psi = _numeric(psi)
    f = _match(f, psi)
    if psi.m != P.m:
        raise DimensionError("section and polarisation dimensions differ")
    _, lam = kp_lambda(P)
    return _bidifferential_on_section(f, psi, lam, -psi.hbar / 4, P.metric, method)


def _frame_coordinates(P: Polarization) -> np.ndarray:
    """Substitution matrix sending frame coordinate theta^a to sum_mu Binv[a, mu] theta^mu."""
    return P.frame_inverse


def gaussian_factor(P: Polarization, hbar: float) -> Multivector:
    """exp(hbar^{-1} q_{i'j} theta^{i'} theta^j) in the original coordinates."""
    n, m = P.n, P.m
    terms = {}
    for ip in range(n):
        for j in range(n):
            c = P.q_mixed[ip, j]
            if c != 0:
                terms[(n + ip + 1, j + 1)] = c / hbar
    expo = Multivector.from_terms(m, terms, hbar=hbar)
    return linear_substitution(exp_even(expo), _frame_coordinates(P))


@dataclass(frozen=True, eq=False)
class PolarizedState:
    """A section annihilated by nabla along ker P.

    ``phi`` is the holomorphic coefficient written in the image-frame
    coordinates of ``P.frame`` when known.
    """

    psi: Multivector
    P: Polarization
    phi: Multivector | None = None

    @property
    def hbar(self) -> float:
        return self.psi.hbar

    def residual(self) -> float:
        return polarization_residual(self.psi, self.P)


def polarized_basis(P: Polarization, hbar: float) -> list[PolarizedState]:
    """The 2^n states theta^S ∧ Gaussian, S running over subsets of the image frame."""
    n, m = P.n, P.m
    if m % 2:
        raise DimensionError("polarised states need an even dimension")
    hbar = float(hbar)
    G = gaussian_factor(P, hbar)
    sub = _frame_coordinates(P)
    out = []
    for S in range(1 << n):
        phi = Multivector.from_masks(m, {S: 1.0}, hbar=hbar)
        psi = wedge(linear_substitution(phi, sub), G)
        out.append(PolarizedState(psi, P, phi))
    return out


def polarization_residual(psi: Multivector, P: Polarization) -> float:
    """max over kernel-frame directions of |nabla_{e_i'} psi|."""
    psi = _numeric(psi)
    return max(covariant_derivative(P.E_prime[:, k], psi, P.metric).norm() for k in range(P.n))


def is_polarized(psi: Multivector, P: Polarization, tol: float = 1e-9) -> bool:
    scale = max(psi.norm(), 1.0)
    return polarization_residual(psi, P) <= tol * scale


def _image_derivative_span(P: Polarization, hbar: float) -> np.ndarray:
    """Orthonormal basis of span{nabla_{e_i} chi} as columns."""
    cols = [nabla_matrix(P.metric, hbar, P.E[:, k]) for k in range(P.n)]
    A = np.hstack(cols)
    u, s, _ = np.linalg.svd(A)
    dim = (1 << P.m) - (1 << P.n)
    if s[dim - 1] < 1e-10 * s[0] or (len(s) > dim and s[dim] > 1e-8 * s[0]):
        raise HilbertError("H'_P has the wrong dimension; P may be invalid")
    return u[:, :dim]


def decompose(psi: Multivector, P: Polarization) -> tuple[PolarizedState, Multivector]:
    """Split psi = h + h' with h in H_P and h' in span{nabla_{e_i} chi}."""
    psi = _numeric(psi)
    hbar = psi.hbar
    basis = polarized_basis(P, hbar)
    H = np.column_stack([b.psi.vector for b in basis])
    Hp = _image_derivative_span(P, hbar)
    M = np.hstack([H, Hp])
    if np.linalg.cond(M) > 1e12:
        raise HilbertError("H_P and H'_P are not complementary")
    x = np.linalg.solve(M, psi.vector)
    h = Multivector.from_vector(P.m, H @ x[: H.shape[1]], hbar=hbar)
    hp = Multivector.from_vector(P.m, Hp @ x[H.shape[1]:], hbar=hbar)
    return PolarizedState(h, P), hp


@lru_cache(maxsize=None)
def _star_signs(m: int) -> np.ndarray:
    k = _bits.popcount(m)
    return np.where(((k * (k + 1)) // 2) % 2 == 1, -1.0, 1.0)


def hermitian_pairing(psi1: Multivector, psi2: Multivector) -> complex:
    """<psi1, psi2> = ∫ dtheta psi1^⋆ ∧ psi2 with (c theta^A)^⋆ = (-1)^{k(k+1)/2} conj(c) theta^A.

    The sign pattern (k = |A|) is the one for which every real nabla_mu is
    skew-adjoint; with it the splitting from :func:`decompose` is orthogonal
    for polarisations coming from complex structures.
    """
    m = psi1.m
    star = Multivector.from_vector(m, _star_signs(m) * np.conj(psi1.vector), hbar=psi1.hbar)
    return complex(wedge(star, psi2).coefficient((1 << m) - 1))


def so_action_section(gamma: Rotation, psi: Multivector) -> Multivector:
    """gamma^H psi = psi ∘ gamma^{-1} in the fixed trivialisation."""
    return so_action_function(gamma, _numeric(psi))
