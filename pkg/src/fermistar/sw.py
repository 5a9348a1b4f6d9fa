"""Stratonovich-Weyl quantiser and Berezin-kernel forms of the star products.

Elements of Cl ⊗̂ Λ are stored as ``{grassmann mask: CliffordElement}``.  The
graded product is (x ⊗ phi)(y ⊗ chi) = (-1)^{|phi||y|} xy ⊗ (phi ∧ chi).

The kernel formulas are written for an orthonormal oriented basis
(q_{mu nu} = delta_{mu nu}); :func:`orthonormal_frame` provides the change of
basis for other metrics.
"""

from __future__ import annotations

import math
import numpy as np

from ._bits import indices_from_mask
from .clifford import (
    CliffordElement,
    algebra_for,
    clifford_mul,
    parity,
    so_action_clifford,
    supertrace,
)
from .forms import Bivector, Metric, Rotation
from .multivector import (
    DimensionError,
    ModeError,
    Multivector,
    exp_even,
    fermi_derivative,
    linear_substitution,
    wedge,
)
from .scalars import GaussianRational, Laurent
from .star import intertwiner, so_action_function

__all__ = [
    "BasisError",
    "SWElement",
    "sw_quantizer",
    "quantize_via_sw",
    "symbol_via_supertrace",
    "supertrace_function",
    "star_via_kernel",
    "delta_function",
    "bilinear_exponent",
    "orthonormal_frame",
]


class BasisError(ValueError):
    """A kernel formula was called with a non-orthonormal metric."""


def _require_orthonormal(metric: Metric):
    if not metric.is_identity():
        raise BasisError("kernel formulas need an orthonormal basis; "
                         "transform with orthonormal_frame first")


def orthonormal_frame(metric: Metric) -> np.ndarray:
    """Matrix L with L^T q L = 1 (Cholesky-style congruence).

    New coordinates theta_new = L^{-1} theta make q the identity.
    """
    q = metric.numeric.real
    c = np.linalg.cholesky(q)
    return np.linalg.inv(c).T


def _sign_insert(B: int, mu_bit: int) -> int:
    """Sign of theta^B ∧ theta^mu -> ordered monomial (generators above mu)."""
    return -1 if bin(B >> (mu_bit.bit_length())).count("1") & 1 else 1


class SWElement:
    """Element of Cl(V, q) ⊗̂ Λ on ``k`` Grassmann generators."""

    def __init__(self, m: int, k: int, parts: dict, metric: Metric, formal: bool, hbar):
        self.m, self.k = m, k
        self.metric = metric
        self.formal = formal
        self.hbar = hbar
        self.parts = {int(B): x for B, x in parts.items() if not x.is_zero()}

    @classmethod
    def unit(cls, m: int, k: int, metric: Metric, formal=False, hbar=1.0):
        one = CliffordElement.scalar(1, m, formal=formal, hbar=hbar)
        return cls(m, k, {0: one}, metric, formal, hbar)

    def _zero_cl(self) -> CliffordElement:
        return CliffordElement.zero(self.m, formal=self.formal, hbar=self.hbar or 1.0)

    def _like(self, parts) -> SWElement:
        return SWElement(self.m, self.k, parts, self.metric, self.formal, self.hbar)

    def __add__(self, other: SWElement) -> SWElement:
        parts = dict(self.parts)
        for B, x in other.parts.items():
            parts[B] = parts[B] + x if B in parts else x
        return self._like(parts)

    def __neg__(self):
        return self._like({B: -x for B, x in self.parts.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> SWElement:
        return self._like({B: x * c for B, x in self.parts.items()})

    def right_grassmann_generator(self, mu: int) -> SWElement:
        """Right multiplication by 1 ⊗ theta^mu."""
        bit = 1 << (mu - 1)
        parts = {}
        for B, x in self.parts.items():
            if B & bit:
                continue
            parts[B | bit] = x if _sign_insert(B, bit) > 0 else -x
        return self._like(parts)

    def right_clifford_generator(self, mu: int) -> SWElement:
        """Right multiplication by theta_hat^mu ⊗ 1 (sign (-1)^{|phi|})."""
        alg = algebra_for(self.metric)
        parts = {}
        for B, x in self.parts.items():
            y = alg.right_generator(x, mu)
            parts[B] = -y if bin(B).count("1") & 1 else y
        return self._like(parts)

    def grassmann_function(self, A: int) -> Multivector:
        """The Λ-valued coefficient of the Clifford monomial A."""
        terms = {B: x.coefficient(A) for B, x in self.parts.items()}
        return Multivector.from_masks(self.k, terms, formal=self.formal, hbar=self.hbar or 1.0)

    def map_grassmann(self, op) -> SWElement:
        """Apply an even linear operator on the Grassmann factor."""
        masks = set()
        for x in self.parts.values():
            masks.update(int(a) for a in x.support())
        parts: dict[int, dict] = {}
        for A in masks:
            fA = op(self.grassmann_function(A))
            for B, c in zip(*_mask_coeffs(fA)):
                parts.setdefault(B, {})[A] = c
        out = {B: CliffordElement.from_masks(self.m, t, formal=self.formal, hbar=self.hbar or 1.0)
               for B, t in parts.items()}
        return self._like(out)

    def map_clifford(self, op) -> SWElement:
        """Apply an even linear operator on the Clifford factor."""
        return self._like({B: op(x) for B, x in self.parts.items()})

    def mul(self, other: SWElement) -> SWElement:
        """Graded product (x ⊗ phi)(y ⊗ chi) = (-1)^{|phi||y|} xy ⊗ phi ∧ chi."""
        if self.k != other.k or self.m != other.m:
            raise DimensionError("SW elements live on different algebras")
        total = {}
        for B, x in self.parts.items():
            odd_phi = bin(B).count("1") & 1
            for C, y in other.parts.items():
                if B & C:
                    continue
                y_signed = parity(y) if odd_phi else y
                prod = clifford_mul(x, y_signed, self.metric)
                inv = sum(bin(C & ((1 << i) - 1)).count("1") for i in range(self.k) if B >> i & 1)
                if inv & 1:
                    prod = -prod
                key = B | C
                total[key] = total[key] + prod if key in total else prod
        return self._like(total)

    def right_function(self, f: Multivector) -> SWElement:
        """Right multiplication by 1 ⊗ f."""
        fe = SWElement(self.m, self.k, {int(B): CliffordElement.scalar(c, self.m, formal=self.formal,
                                                                       hbar=self.hbar or 1.0)
                                        for B, c in zip(*_mask_coeffs(f))},
                       self.metric, self.formal, self.hbar)
        return self.mul(fe)

    def right_clifford(self, a: CliffordElement) -> SWElement:
        """Right multiplication by a ⊗ 1."""
        return self.mul(SWElement(self.m, self.k, {0: a}, self.metric, self.formal, self.hbar))

    def berezin(self) -> CliffordElement:
        """∫ dtheta over all k generators: (-1)^{|x| k} x for the top monomial."""
        top = (1 << self.k) - 1
        x = self.parts.get(top)
        if x is None:
            return self._zero_cl()
        return parity(x) if self.k % 2 else x

    def supertrace(self) -> Multivector:
        """Apply the supertrace to the Clifford factor."""
        terms = {B: supertrace(x) for B, x in self.parts.items()}
        return Multivector.from_masks(self.k, terms, formal=self.formal, hbar=self.hbar or 1.0)

    def shift_grassmann(self, offset: int, k: int) -> SWElement:
        """Move the Grassmann generators up by ``offset`` inside k generators."""
        return SWElement(self.m, k, {B << offset: x for B, x in self.parts.items()},
                         self.metric, self.formal, self.hbar)


def _mask_coeffs(f: Multivector):
    sup = [int(B) for B in f.support()]
    return sup, [f.coefficient(B) for B in sup]


def sw_quantizer(K: Bivector | None, metric: Metric, *, formal: bool = False,
                 hbar: float = 1.0) -> SWElement:
    """Omega_K = exp((hbar/8) K^{mu nu} d_mu d_nu) Omega_0 with
    Omega_0(theta) = (theta^1 - theta_hat^1) ... (theta^m - theta_hat^m)."""
    _require_orthonormal(metric)
    m = metric.m
    omega = SWElement.unit(m, m, metric, formal, None if formal else hbar)
    for mu in range(1, m + 1):
        omega = omega.right_grassmann_generator(mu) - omega.right_clifford_generator(mu)
    if K is not None:
        zero = Bivector.zero(m)
        omega = omega.map_grassmann(lambda f: intertwiner(K, zero, f))
    return omega


def quantize_via_sw(f: Multivector, K: Bivector | None, metric: Metric) -> CliffordElement:
    """Q_K(f) = ∫ dtheta Omega_K(theta) f(theta)."""
    omega = sw_quantizer(K, metric, formal=f.formal, hbar=f.hbar or 1.0)
    return omega.right_function(f).berezin()


def _two_over_i_hbar_power(n: int, formal: bool, hbar):
    if formal:
        c = GaussianRational(1)
        for _ in range(n):
            c = c * GaussianRational(0, -2)
        return Laurent([c], -n)
    return (2.0 / (1j * hbar)) ** n


def supertrace_function(X: SWElement) -> Multivector:
    return X.supertrace()


def symbol_via_supertrace(a: CliffordElement, K: Bivector | None, metric: Metric) -> Multivector:
    """Q_K^{-1}(a) = (2/(i hbar))^n str(Omega_{-K}(theta) a)."""
    if a.m % 2:
        raise DimensionError("the supertrace route needs an even number of generators")
    negK = None if K is None else -K
    omega = sw_quantizer(negK, metric, formal=a.formal, hbar=a.hbar or 1.0)
    f = omega.right_clifford(a).supertrace()
    return f * _two_over_i_hbar_power(a.m // 2, a.formal, a.hbar)


def delta_function(m: int, *, formal: bool = False, hbar: float = 1.0) -> Multivector:
    """delta(theta - theta') = prod_mu (theta^mu - theta'^mu) on 2m generators."""
    out = Multivector.scalar(1, 2 * m, formal=formal, hbar=hbar)
    for mu in range(1, m + 1):
        diff = Multivector.generator(mu, 2 * m, formal=formal, hbar=hbar) - \
            Multivector.generator(m + mu, 2 * m, formal=formal, hbar=hbar)
        out = wedge(out, diff)
    return out


def bilinear_exponent(B: np.ndarray, k: int, first: int, second: int, *, formal=False,
                      hbar: float = 1.0) -> Multivector:
    """sum_{mu nu} B[mu, nu] theta_(first)^mu theta_(second)^nu on k generators.

    ``first`` and ``second`` are the generator offsets of the two copies.
    """
    m = B.shape[0]
    terms = {}
    for mu in range(m):
        for nu in range(m):
            if B[mu, nu] != 0:
                terms[(first + mu + 1, second + nu + 1)] = terms.get(
                    (first + mu + 1, second + nu + 1), 0) + B[mu, nu]
    return Multivector.from_terms(k, terms, formal=formal, hbar=hbar)


def _integrate_blocks(F: Multivector, m: int) -> Multivector:
    """∫ dtheta' dtheta'' over generators m+1..3m, leaving a function of theta.

    The inner integral over theta'' is applied first; each Berezin integral is
    the composite d_m ∘ ... ∘ d_1 on its block, so Koszul signs from passing
    the theta factors are included.
    """
    for block in (2, 1):
        for mu in range(1, m + 1):
            F = fermi_derivative(block * m + mu, F)
    data = F.data[:, : 1 << m]
    return Multivector(m, data, F.lo, F.hbar)


def star_via_kernel(f: Multivector, g: Multivector, K: Bivector | None, metric: Metric,
                    hbar: float | None = None, *, kernel: str = "gaussian") -> Multivector:
    """Star product as a Berezin integral over two extra copies of the generators.

    Computes c ∫∫ dtheta' dtheta'' f(theta + s theta') g(theta + s theta'')
    exp[A(theta', theta'')] with s = √hbar/2 (numeric mode, orthonormal basis).

    ``kernel="gaussian"`` uses A = (q - K^flat)^{-1} and c = (-1)^n det(q - K^flat),
    which reproduces ``star_k`` for every K.  ``kernel="linear"`` uses
    A = q + K^flat and c = (-1)^n; it agrees with the gaussian kernel at K = 0
    and to first order in K.
    """
    if f.formal or g.formal:
        raise ModeError("the kernel formula involves sqrt(hbar); use numeric mode")
    _require_orthonormal(metric)
    m = f.m
    if m % 2:
        raise DimensionError("the kernel formula needs an even number of generators")
    h = f.hbar if hbar is None else float(hbar)
    s = math.sqrt(h) / 2
    eye = np.eye(m)
    zero = np.zeros((m, m))
    F = wedge(linear_substitution(f.with_hbar(h), np.hstack([eye, s * eye, zero])),
              linear_substitution(g.with_hbar(h), np.hstack([eye, zero, s * eye])))
    q = metric.numeric
    kflat = np.zeros((m, m)) if K is None else q @ K.numeric @ q
    if kernel == "gaussian":
        form = np.linalg.inv(q - kflat)
        prefactor = (-1) ** (m // 2) * np.linalg.det(q - kflat)
    elif kernel == "linear":
        form = q + kflat
        prefactor = (-1) ** (m // 2)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    F = wedge(F, exp_even(bilinear_exponent(form, 3 * m, m, 2 * m, hbar=h)))
    return _integrate_blocks(F, m) * complex(prefactor)


def so_action_sw(gamma: Rotation, X: SWElement) -> SWElement:
    """(gamma^C ⊗̂ gamma^O) applied to an SW element."""
    Y = X.map_clifford(lambda x: so_action_clifford(gamma, x, X.metric))
    return Y.map_grassmann(lambda f: so_action_function(gamma, f))


def triple_supertrace(metric: Metric, *, hbar: float = 1.0) -> tuple[Multivector, Multivector]:
    """str(Omega_0(theta') Omega_0(theta'') Omega_0(theta)) and its closed form.

    Generators: theta = 1..m, theta' = m+1..2m, theta'' = 2m+1..3m.  The
    closed form is (i hbar)^{3n}/2^{5n} exp[(4/hbar)(q(theta,theta') +
    q(theta',theta'') + q(theta'',theta))].
    """
    _require_orthonormal(metric)
    m = metric.m
    n = m // 2
    k = 3 * m
    om = sw_quantizer(None, metric, hbar=hbar)
    om_t = om.shift_grassmann(0, k)
    om_p = om.shift_grassmann(m, k)
    om_pp = om.shift_grassmann(2 * m, k)
    lhs = om_p.mul(om_pp).mul(om_t).supertrace()
    q = metric.numeric
    expo = (bilinear_exponent(q, k, 0, m, hbar=hbar) + bilinear_exponent(q, k, m, 2 * m, hbar=hbar)
            + bilinear_exponent(q, k, 2 * m, 0, hbar=hbar)) * (4.0 / hbar)
    rhs = exp_even(expo) * ((1j * hbar) ** (3 * n) / 2 ** (5 * n))
    return lhs, rhs


def pair_supertrace(K: Bivector | None, metric: Metric, *, hbar: float = 1.0):
    """str(Omega_{-K}(theta) Omega_K(theta')) and (i hbar/2)^n delta(theta - theta')."""
    _require_orthonormal(metric)
    m = metric.m
    left = sw_quantizer(None if K is None else -K, metric, hbar=hbar).shift_grassmann(0, 2 * m)
    right = sw_quantizer(K, metric, hbar=hbar).shift_grassmann(m, 2 * m)
    lhs = left.mul(right).supertrace()
    rhs = delta_function(m, hbar=hbar) * ((0.5j * hbar) ** (m // 2))
    return lhs, rhs


__all__ += ["so_action_sw", "triple_supertrace", "pair_supertrace"]
