"""Identity suites run by ``fermistar verify``.

Every suite receives the configuration, a :class:`Recorder` and its own
generator.  Checks report a residual; exact checks pass only at residual 0,
numeric ones at the configured tolerance unless a check fixes its own.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from ..clifford import (
    CliffordElement,
    clifford_derivative,
    clifford_mul,
    inner_derivative,
    quantize,
    so_action_clifford,
    supertrace,
    symbol,
)
from ..forms import Bivector, Metric, transform_bivector
from ..hilbert import (
    decompose,
    is_polarized,
    polarization_residual,
    polarized_basis,
    prequantum_op,
    so_action_section,
    star_on_state,
)
from ..multivector import (
    Multivector,
    berezin_integral,
    diagonal_pullback,
    fermi_derivative,
    slot_derivative,
    tensor_embed,
    tri_diagonal_pullback,
    triple_embed,
    wedge,
)
from ..polarization import (
    conjugate,
    curvature_form,
    from_complex_structure,
    geodesic_path,
    kahler_form,
    kp_lambda,
    polarization_from_frames,
    retraction,
    tangent_space_basis,
)
from ..sampling import (
    make_rng,
    random_bivector,
    random_complex_structure,
    random_metric,
    random_multivector,
    random_polarization,
    random_q_antisymmetric,
    rotation_in,
)
from ..scalars import GaussianRational, Laurent
from ..star import (
    hamiltonian_field,
    apply_vector_field,
    intertwiner,
    o_transport,
    poisson_bracket,
    so_action_function,
    star_k,
    star_k_reference,
)
from ..sw import (
    pair_supertrace,
    quantize_via_sw,
    so_action_sw,
    star_via_kernel,
    sw_quantizer,
    symbol_via_supertrace,
    triple_supertrace,
)
from ..transport import SpinElement, rho, rho_hat
from ..worked import complex_frame_example
from . import oracles
from .config import SuiteConfig
from .report import CheckRecord

__all__ = ["Outcome", "Recorder", "SUITE_CAPS", "SUITE_FUNCTIONS", "suite_rng", "run_suite"]

# Largest dimension each suite runs at; bigger --m values are capped.
SUITE_CAPS = {
    "algebra": 8,
    "star": 6,
    "clifford": 6,
    "polarization": 8,
    "states": 6,
    "transport": 4,
    "metaplectic": 4,
    "equivariance": 4,
}


@dataclass
class Outcome:
    """Residual with an explicit verdict, for checks that are not 'residual <= tol'."""

    residual: float
    passed: bool
    detail: str = ""


@dataclass
class Recorder:
    tol: float
    m: int
    records: list = field(default_factory=list)

    def check(self, name: str, anchor: str, fn: Callable, *, exact: bool = False,
              tol: float | None = None, m: int | None = None) -> CheckRecord:
        limit = 0.0 if exact else (self.tol if tol is None else tol)
        start = time.perf_counter()
        detail = ""
        try:
            out = fn()
            if isinstance(out, Outcome):
                residual, passed, detail = float(out.residual), out.passed, out.detail
            else:
                residual = float(out)
                passed = residual <= limit
            status = "pass" if passed else "fail"
        except Exception as exc:  # a crashing check is reported, not raised
            residual, status = math.inf, "error"
            detail = f"{type(exc).__name__}: {exc}"
        record = CheckRecord(name, anchor, status, residual, time.perf_counter() - start,
                             m=self.m if m is None else m, detail=detail)
        self.records.append(record)
        return record


def suite_rng(seed: int, suite: str) -> np.random.Generator:
    """Independent stream per suite so suites can run in any order or in parallel."""
    digest = hashlib.sha256(f"{seed}:{suite}".encode()).digest()
    return make_rng(int.from_bytes(digest[:8], "little"))


def _exact_gap(a, b) -> float:
    """0 for equal elements, otherwise the norm of the difference at hbar = 1 (at least 1)."""
    if a == b:
        return 0.0
    d = a - b
    d = d.evaluate(1.0) if d.formal else d
    return max(d.norm(), 1.0)


def _num_gap(a, b) -> float:
    return (a - b).norm() / max(1.0, b.norm())


def _max(values) -> float:
    return max(values, default=0.0)


def _even(m: int) -> int:
    return m - (m % 2)


# --------------------------------------------------------------------------- algebra


def suite_algebra(cfg: SuiteConfig, rec: Recorder, rng: np.random.Generator) -> None:
    m = rec.m
    S = cfg.samples
    terms = None if m <= 6 else 12

    def rnd(**kw):
        return random_multivector(m, rng, formal=True, terms=terms, **kw)

    def homogeneous():
        return rnd().grade(int(rng.integers(0, m + 1)))

    def associativity():
        return _max(_exact_gap(wedge(wedge(f, g), h), wedge(f, wedge(g, h)))
                    for f, g, h in ((rnd(), rnd(), rnd()) for _ in range(S)))

    def commutativity():
        worst = 0.0
        for _ in range(S):
            f, g = homogeneous(), homogeneous()
            sign = (-1) ** (max(f.degree, 0) * max(g.degree, 0))
            worst = max(worst, _exact_gap(wedge(f, g), wedge(g, f) * sign))
        return worst

    def leibniz():
        worst = 0.0
        for _ in range(S):
            f, g = homogeneous(), rnd()
            mu = int(rng.integers(1, m + 1))
            sign = (-1) ** max(f.degree, 0)
            rhs = wedge(fermi_derivative(mu, f), g) + wedge(f, fermi_derivative(mu, g)) * sign
            worst = max(worst, _exact_gap(fermi_derivative(mu, wedge(f, g)), rhs))
        return worst

    def doubled_leibniz():
        worst = 0.0
        mm = min(m, 4)
        for _ in range(S):
            a, b, c, d = (random_multivector(mm, rng, formal=True) for _ in range(4))
            F = tensor_embed(a, b) + tensor_embed(c, d)
            for mu in range(1, mm + 1):
                lhs = fermi_derivative(mu, diagonal_pullback(F))
                rhs = diagonal_pullback(slot_derivative(1, mu, F) + slot_derivative(2, mu, F))
                worst = max(worst, _exact_gap(lhs, rhs))
        return worst

    def tri_coherence():
        mm = min(m, 4)
        worst = 0.0
        for _ in range(S):
            f, g, h = (random_multivector(mm, rng, formal=True) for _ in range(3))
            T = triple_embed(f, g, h)
            worst = max(worst, _exact_gap(tri_diagonal_pullback(T, mm, "left"),
                                          tri_diagonal_pullback(T, mm, "right")))
            worst = max(worst, _exact_gap(tri_diagonal_pullback(T, mm, "left"), wedge(wedge(f, g), h)))
        return worst

    def berezin_top():
        top = Multivector.monomial(range(1, m + 1), m, formal=True)
        value = berezin_integral(top)
        return abs((value.evaluate(1.0) if isinstance(value, Laurent) else complex(value)) - 1)

    def json_roundtrip():
        worst = 0.0
        for _ in range(S):
            f = rnd()
            worst = max(worst, _exact_gap(Multivector.from_json(f.to_json()), f))
            g = random_multivector(m, rng, hbar=cfg.hbar)
            worst = max(worst, _exact_gap(Multivector.from_json(g.to_json()), g))
        return worst

    rec.check("wedge associativity", "wedge.associative", associativity, exact=True)
    rec.check("wedge graded commutativity", "wedge.graded_commutative", commutativity, exact=True)
    rec.check("derivative Leibniz rule", "derivative.leibniz", leibniz, exact=True)
    rec.check("doubled-algebra Leibniz identity", "diagonal.leibniz", doubled_leibniz, exact=True,
              m=min(m, 4))
    rec.check("tri-diagonal coherence", "diagonal.tri_coherence", tri_coherence, exact=True, m=min(m, 4))
    rec.check("Berezin integral of the top monomial", "berezin.top", berezin_top, exact=True)
    rec.check("JSON round trip", "json.roundtrip", json_roundtrip, exact=True)


# --------------------------------------------------------------------------- star


def _awedgef(a, f, g, metric: Metric) -> float:
    """Both product rules for a degree-one a; the second uses the right derivative of f."""
    m = f.m
    zero = Bivector.zero(m)
    quarter = GaussianRational(Fraction(1, 4))
    qs = metric.qsharp_exact

    def s(x, y):
        return star_k(x, y, metric, zero)

    sign = (-1) ** max(f.degree, 0)
    amu = [a.coefficient(1 << i) for i in range(m)]
    c1, c2 = f.like_zero(), f.like_zero()
    for mu in range(m):
        for nu in range(m):
            c = amu[mu] * qs[mu, nu]
            if c == 0:
                continue
            c1 = c1 + s(f, fermi_derivative(nu + 1, g)).scale(c)
            c2 = c2 + s(fermi_derivative(nu + 1, f), g).scale(c)
    r1 = wedge(a, s(f, g)) + (c1 * sign).scale(quarter).shift_hbar(1)
    r2 = wedge(a, s(f, g)) * sign - (c2 * sign).scale(quarter).shift_hbar(1)
    return max(_exact_gap(s(wedge(a, f), g), r1), _exact_gap(s(f, wedge(a, g)), r2))


def suite_star(cfg: SuiteConfig, rec: Recorder, rng: np.random.Generator) -> None:
    m = rec.m
    S = cfg.samples
    metric = Metric.identity(m) if m == 2 else random_metric(m, rng)
    ident = Metric.identity(m)

    def rnd():
        return random_multivector(m, rng, formal=True)

    def homogeneous():
        return rnd().grade(int(rng.integers(0, m + 1)))

    def associativity():
        worst = 0.0
        if m <= 3:
            K = random_bivector(m, rng, formal=True)
            monos = [Multivector.from_masks(m, {A: 1}, formal=True) for A in range(1 << m)]
            for f, g, h in itertools.product(monos, repeat=3):
                worst = max(worst, _exact_gap(star_k(star_k(f, g, ident, K), h, ident, K),
                                              star_k(f, star_k(g, h, ident, K), ident, K)))
            return worst
        for _ in range(S):
            K = random_bivector(m, rng, formal=True)
            f, g, h = rnd(), rnd(), rnd()
            worst = max(worst, _exact_gap(star_k(star_k(f, g, ident, K), h, ident, K),
                                          star_k(f, star_k(g, h, ident, K), ident, K)))
        return worst

    def reference():
        mm = min(m, 4)
        worst = 0.0
        for _ in range(S):
            K = random_bivector(mm, rng, formal=True)
            q = Metric.identity(mm)
            f = random_multivector(mm, rng, formal=True, terms=4)
            g = random_multivector(mm, rng, formal=True, terms=4)
            worst = max(worst, _exact_gap(star_k(f, g, q, K), star_k_reference(f, g, q, K)))
        return worst

    def first_order():
        worst = 0.0
        for _ in range(S):
            K = random_bivector(m, rng, formal=True)
            f, g = homogeneous(), homogeneous()
            sign = (-1) ** (max(f.degree, 0) * max(g.degree, 0))
            comm = star_k(f, g, ident, K) - star_k(g, f, ident, K) * sign
            worst = max(worst, _exact_gap(comm.hbar_coefficient(0), f.like_zero()),
                        _exact_gap(comm.hbar_coefficient(1), poisson_bracket(f, g, ident)))
        return worst

    def degree_bound():
        worst = 0
        for _ in range(S):
            K = random_bivector(m, rng, formal=True)
            p = star_k(rnd(), rnd(), ident, K)
            if not p.is_zero():
                worst = max(worst, p.hbar_degree - m, -p.hbar_low_degree)
        return worst

    def unit():
        K = random_bivector(m, rng, formal=True)
        f = rnd()
        one = f.like_scalar(1)
        return max(_exact_gap(star_k(one, f, ident, K), f), _exact_gap(star_k(f, one, ident, K), f))

    def degree_one():
        K = random_bivector(m, rng, formal=True)
        a = rnd().grade(1)
        b = rnd().grade(1)
        lam = ident.qsharp_exact + K.exact
        val = GaussianRational(0)
        for mu in range(m):
            for nu in range(m):
                val = val + a.coefficient(1 << mu) * b.coefficient(1 << nu) * lam[mu, nu]
        expect = wedge(a, b) + a.like_scalar(val * GaussianRational(Fraction(1, 4))).shift_hbar(1)
        return _exact_gap(star_k(a, b, ident, K), expect)

    def jacobi():
        worst = 0.0
        for _ in range(S):
            f, g, h = homogeneous(), homogeneous(), homogeneous()
            df, dg, dh = (max(x.degree, 0) for x in (f, g, h))
            total = (poisson_bracket(f, poisson_bracket(g, h, metric), metric) * (-1) ** (df * dh)
                     + poisson_bracket(g, poisson_bracket(h, f, metric), metric) * (-1) ** (dg * df)
                     + poisson_bracket(h, poisson_bracket(f, g, metric), metric) * (-1) ** (dh * dg))
            worst = max(worst, _exact_gap(total, f.like_zero()))
        return worst

    def bracket_leibniz():
        worst = 0.0
        for _ in range(S):
            f, g, h = homogeneous(), homogeneous(), rnd()
            sign = (-1) ** (max(f.degree, 0) * max(g.degree, 0))
            rhs = wedge(poisson_bracket(f, g, metric), h) + wedge(g, poisson_bracket(f, h, metric)) * sign
            worst = max(worst, _exact_gap(poisson_bracket(f, wedge(g, h), metric), rhs))
        return worst

    def hamiltonian():
        worst = 0.0
        half = GaussianRational(Fraction(1, 2))
        for _ in range(S):
            f, g = rnd(), rnd()
            field_ = hamiltonian_field(f, metric)
            worst = max(worst, _exact_gap(apply_vector_field(field_, g).scale(half),
                                          poisson_bracket(f, g, metric)))
        return worst

    def product_rules():
        mm = min(m, 4)
        q = Metric.identity(mm) if mm == 2 else random_metric(mm, rng)
        worst = 0.0
        for _ in range(S):
            a = random_multivector(mm, rng, formal=True).grade(1)
            f = random_multivector(mm, rng, formal=True).grade(int(rng.integers(0, mm + 1)))
            g = random_multivector(mm, rng, formal=True)
            worst = max(worst, _awedgef(a, f, g, q))
        return worst

    def intertwining():
        worst = 0.0
        for _ in range(S):
            K, K2 = random_bivector(m, rng, formal=True), random_bivector(m, rng, formal=True)
            f, g = rnd(), rnd()
            lhs = intertwiner(K, K2, star_k(f, g, ident, K))
            rhs = star_k(intertwiner(K, K2, f), intertwiner(K, K2, g), ident, K2)
            worst = max(worst, _exact_gap(lhs, rhs))
        return worst

    def cocycle():
        worst = 0.0
        for _ in range(S):
            K, K1, K2 = (random_bivector(m, rng, formal=True) for _ in range(3))
            f = rnd()
            direct = intertwiner(K, K2, f)
            worst = max(worst, _exact_gap(direct, intertwiner(K1, K2, intertwiner(K, K1, f))),
                        _exact_gap(intertwiner(K2, K, direct), f),
                        _exact_gap(o_transport([K, K1, K2], f), direct))
        return worst

    rec.check("star associativity", "star.associative", associativity, exact=True)
    rec.check("sparse and direct star products agree", "star.dual_route", reference, exact=True, m=min(m, 4))
    rec.check("graded commutator first-order law", "star.first_order", first_order, exact=True)
    rec.check("hbar degree bound", "star.degree_bound", degree_bound, exact=True)
    rec.check("unit", "star.unit", unit, exact=True)
    rec.check("degree-one product", "star.degree_one", degree_one, exact=True)
    rec.check("graded Jacobi identity", "bracket.jacobi", jacobi, exact=True)
    rec.check("graded Leibniz rule for the bracket", "bracket.leibniz", bracket_leibniz, exact=True)
    rec.check("Hamiltonian field reproduces the bracket", "bracket.hamiltonian", hamiltonian, exact=True)
    rec.check("product rules for a degree-one factor", "star.degree_one_factor", product_rules, exact=True,
              m=min(m, 4))
    rec.check("intertwiner is a star isomorphism", "intertwiner.theorem", intertwining, exact=True)
    rec.check("intertwiner cocycle and path independence", "intertwiner.cocycle", cocycle, exact=True)


# --------------------------------------------------------------------------- clifford


def suite_clifford(cfg: SuiteConfig, rec: Recorder, rng: np.random.Generator) -> None:
    m = rec.m
    S = cfg.samples
    small = min(_even(m) or 2, 4)
    metric = Metric.identity(m) if m == 2 else random_metric(m, rng)

    def rnd(mm=m, **kw):
        return random_multivector(mm, rng, formal=True, **kw)

    def homomorphism():
        worst = 0.0
        mm = min(m, 4)
        q = Metric.identity(mm) if mm == 2 else random_metric(mm, rng)
        for _ in range(S):
            K = random_bivector(mm, rng, formal=True)
            f, g = rnd(mm), rnd(mm)
            lhs = clifford_mul(quantize(f, K, q), quantize(g, K, q), q)
            worst = max(worst, _exact_gap(lhs.as_multivector(), quantize(star_k(f, g, q, K), K, q).as_multivector()))
        return worst

    def roundtrip():
        worst = 0.0
        for _ in range(S):
            K = random_bivector(m, rng, formal=True)
            f = rnd()
            worst = max(worst, _exact_gap(symbol(quantize(f, K, metric), K, metric), f))
        return worst

    def supertrace_table():
        mm = _even(m) or 2
        worst = 0.0
        for A in range(1 << mm):
            x = CliffordElement.from_multivector(Multivector.from_masks(mm, {A: 1}, formal=True))
            value = supertrace(x)
            value = value.evaluate(cfg.hbar) if isinstance(value, Laurent) else complex(value)
            expect = (1j * cfg.hbar / 2) ** (mm // 2) if A == (1 << mm) - 1 else 0
            worst = max(worst, abs(value - expect))
        return worst

    def derivative():
        worst = 0.0
        zero = Bivector.zero(m)
        for _ in range(S):
            f = rnd()
            x = quantize(f, zero, metric)
            for mu in range(1, m + 1):
                target = quantize(fermi_derivative(mu, f), zero, metric).as_multivector()
                worst = max(worst, _exact_gap(clifford_derivative(mu, x).as_multivector(), target),
                            _exact_gap(inner_derivative(mu, x, metric).as_multivector(), target))
        return worst

    def flat():
        worst = 0.0
        for _ in range(S):
            K0, K1 = random_bivector(m, rng, formal=True), random_bivector(m, rng, formal=True)
            f = rnd()
            worst = max(worst, _exact_gap(quantize(intertwiner(K0, K1, f), K1, metric).as_multivector(),
                                          quantize(f, K0, metric).as_multivector()))
        return worst

    def sw_route():
        q = Metric.identity(small)
        worst = 0.0
        for _ in range(S):
            K = random_bivector(small, rng)
            f = random_multivector(small, rng, hbar=cfg.hbar)
            worst = max(worst, _num_gap(quantize_via_sw(f, K, q).as_multivector(),
                                        quantize(f, K, q).as_multivector()))
            x = quantize(f, K, q)
            worst = max(worst, _num_gap(symbol_via_supertrace(x, K, q), f))
        return worst

    def kernel_route():
        worst = 0.0
        for mm in sorted({2, small}):
            q = Metric.identity(mm)
            for hbar in (0.3, 1.0, 2.7):
                K = random_bivector(mm, rng)
                f = random_multivector(mm, rng, hbar=hbar)
                g = random_multivector(mm, rng, hbar=hbar)
                worst = max(worst, _num_gap(star_via_kernel(f, g, K, q), star_k(f, g, q, K)))
        return worst

    def supertrace_gaussians():
        lhs, rhs = triple_supertrace(Metric.identity(2), hbar=cfg.hbar)
        worst = _num_gap(lhs, rhs)
        K = random_bivector(small, rng)
        lhs, rhs = pair_supertrace(K, Metric.identity(small), hbar=cfg.hbar)
        return max(worst, _num_gap(lhs, rhs))

    def sw_equivariance():
        q = Metric.identity(small)
        worst = 0.0
        for _ in range(max(1, S // 5)):
            gamma = rotation_in(q, rng)
            K = random_bivector(small, rng)
            lhs = so_action_sw(gamma, sw_quantizer(K, q, hbar=cfg.hbar))
            rhs = sw_quantizer(transform_bivector(gamma, K), q, hbar=cfg.hbar)
            diff = lhs - rhs
            worst = max(worst, _max(x.as_multivector().norm() for x in diff.parts.values()))
        return worst

    rec.check("quantisation is multiplicative", "quantize.homomorphism", homomorphism, exact=True,
              m=min(m, 4))
    rec.check("symbol inverts quantisation", "symbol.roundtrip", roundtrip, exact=True)
    rec.check("supertrace table", "supertrace.table", supertrace_table, tol=1e-14, m=_even(m) or 2)
    rec.check("quantisation commutes with derivatives", "quantize.derivative", derivative, exact=True)
    rec.check("flat transport maps to constants", "quantize.flat", flat, exact=True)
    rec.check("SW quantiser and supertrace symbol routes", "sw.route", sw_route, tol=1e-12, m=small)
    rec.check("kernel integral star product", "kernel.route", kernel_route, tol=max(cfg.tol, 1e-10), m=small)
    rec.check("supertrace Gaussian closed forms", "sw.gaussians", supertrace_gaussians, m=small)
    rec.check("SW quantiser equivariance", "sw.equivariance", sw_equivariance, m=small)


# --------------------------------------------------------------------------- polarization


def suite_polarization(cfg: SuiteConfig, rec: Recorder, rng: np.random.Generator) -> None:
    m = _even(rec.m) or 2
    S = cfg.samples
    metric = random_metric(m, rng)
    n = m // 2

    def frames():
        worst = 0.0
        for _ in range(S):
            P = random_polarization(metric, rng, in_j=bool(rng.integers(0, 2)))
            Q = polarization_from_frames(P.E, P.E_prime, metric)
            worst = max(worst, float(np.max(np.abs(Q.P - P.P))))
        return worst

    def tangent_dim():
        P = random_polarization(metric, rng)
        dim = len(tangent_space_basis(P))
        return Outcome(abs(dim - n * (n - 1)), dim == n * (n - 1), f"dimension {dim}")

    def kp_equivariance():
        worst = 0.0
        for _ in range(S):
            P = random_polarization(metric, rng, in_j=False)
            gamma = rotation_in(metric, rng)
            K, _ = kp_lambda(P)
            Kg, _ = kp_lambda(conjugate(P, gamma))
            worst = max(worst, float(np.max(np.abs(Kg.numeric - transform_bivector(gamma, K).numeric))))
        return worst

    def retraction_checks():
        worst = 0.0
        for _ in range(S):
            J = random_complex_structure(metric, rng)
            worst = max(worst, float(np.max(np.abs(retraction(from_complex_structure(J)).J - J.J))))
            P = random_polarization(metric, rng, in_j=False, scale=0.2)
            gamma = rotation_in(metric, rng)
            lhs = retraction(conjugate(P, gamma)).J
            rhs = gamma.gamma @ retraction(P).J @ gamma.inverse_matrix
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst

    def curvature_kahler():
        worst = 0.0
        for _ in range(S):
            J = random_complex_structure(metric, rng)
            P = from_complex_structure(J)
            X1, X2 = random_q_antisymmetric(metric, rng), random_q_antisymmetric(metric, rng)
            dJ1, dJ2 = X1 @ J.J - J.J @ X1, X2 @ J.J - J.J @ X2
            dP1, dP2 = X1 @ P.P - P.P @ X1, X2 @ P.P - P.P @ X2
            worst = max(worst, abs(curvature_form(P.P, dP1, dP2) - 0.5j * kahler_form(J, dJ1, dJ2)))
        return worst

    rec.check("polarisation from its frames", "polarization.frames", frames, m=m)
    rec.check("tangent space dimension", "polarization.tangent_dimension", tangent_dim, m=m)
    rec.check("K_P equivariance", "polarization.kp_equivariance", kp_equivariance, m=m)
    rec.check("retraction fixes and commutes with rotations", "polarization.retraction", retraction_checks,
              tol=max(cfg.tol, 1e-9), m=m)
    rec.check("curvature is a multiple of the Kahler form", "polarization.curvature", curvature_kahler, m=m)


# --------------------------------------------------------------------------- states


def suite_states(cfg: SuiteConfig, rec: Recorder, rng: np.random.Generator) -> None:
    m = _even(rec.m) or 2
    S = cfg.samples
    h = cfg.hbar
    metric = random_metric(m, rng)

    def worked():
        ex = complex_frame_example(h)
        out = star_on_state(ex.f, ex.psi, ex.P)
        pre = prequantum_op(ex.f, ex.psi, ex.metric)
        res = max(oracles.relative(out, ex.expected_star), oracles.relative(pre, ex.expected_prequantum))
        flags = is_polarized(out, ex.P) and not is_polarized(pre, ex.P)
        return Outcome(res, res <= 1e-12 and flags, "" if flags else "polarisation flags differ")

    def basis():
        worst = 0.0
        for in_j in (True, False):
            P = random_polarization(metric, rng, in_j=in_j)
            states = polarized_basis(P, h)
            if len(states) != 1 << (m // 2):
                return math.inf
            worst = max(worst, _max(polarization_residual(s.psi, P) / s.psi.norm() for s in states))
        return worst

    def preservation():
        worst = 0.0
        for in_j in (True, False):
            P = random_polarization(metric, rng, in_j=in_j)
            states = polarized_basis(P, h)
            for _ in range(S):
                f = random_multivector(m, rng, hbar=h)
                worst = max(worst, _max(oracles.preservation_residual(f, s.psi, P) for s in states))
        return worst

    def associativity():
        worst = 0.0
        for _ in range(S):
            P = random_polarization(metric, rng, in_j=bool(rng.integers(0, 2)))
            K, _ = kp_lambda(P)
            psi = polarized_basis(P, h)[int(rng.integers(0, 1 << (m // 2)))].psi
            f, g = random_multivector(m, rng, hbar=h), random_multivector(m, rng, hbar=h)
            lhs = star_on_state(f, star_on_state(g, psi, P), P)
            rhs = star_on_state(star_k(f, g, metric, K), psi, P)
            worst = max(worst, oracles.relative(lhs, rhs))
        return worst

    def first_order():
        worst = 0.0
        for _ in range(S):
            P = random_polarization(metric, rng)
            psi = polarized_basis(P, h)[int(rng.integers(0, 1 << (m // 2)))].psi
            f = random_multivector(m, rng, hbar=h, max_grade=1)
            worst = max(worst, oracles.relative(star_on_state(f, psi, P), prequantum_op(f, psi, metric)))
        return worst

    def dirac():
        worst = 0.0
        for _ in range(S):
            P = random_polarization(metric, rng)
            psi = polarized_basis(P, h)[int(rng.integers(0, 1 << (m // 2)))].psi
            f, g = random_multivector(m, rng, hbar=h), random_multivector(m, rng, hbar=h)
            scale = f.norm() * g.norm() * psi.norm()
            worst = max(worst, oracles.dirac_residual(f, g, psi, metric) / scale)
        return worst

    def splitting():
        worst = 0.0
        for _ in range(S):
            P = random_polarization(metric, rng, in_j=bool(rng.integers(0, 2)))
            psi = random_multivector(m, rng, hbar=h)
            hp, rest = decompose(psi, P)
            worst = max(worst, oracles.relative(hp.psi + rest, psi),
                        polarization_residual(hp.psi, P) / psi.norm())
        return worst

    def anticommutator():
        return _max(oracles.curvature_anticommutator(random_multivector(m, rng, hbar=h), metric)
                    for _ in range(max(1, S // 5)))

    rec.check("worked example in a complex frame", "states.worked_example", worked, m=4)
    rec.check("polarised basis states", "states.basis", basis, tol=max(cfg.tol, 1e-9), m=m)
    rec.check("star product preserves polarisation", "states.preservation", preservation, tol=1e-9, m=m)
    rec.check("associativity on states", "states.associative", associativity, m=m)
    rec.check("degree-one functions act by prequantisation", "states.first_order", first_order, m=m)
    rec.check("Dirac condition", "states.dirac", dirac, m=m)
    rec.check("direct-sum splitting", "states.decompose", splitting, tol=1e-9, m=m)
    rec.check("connection curvature", "states.curvature", anticommutator, m=m)


# --------------------------------------------------------------------------- transport


def _j_setup(rng, m=4):
    metric = Metric.identity(m)
    J = random_complex_structure(metric, rng)
    P = from_complex_structure(J)
    X1, X2 = random_q_antisymmetric(metric, rng), random_q_antisymmetric(metric, rng)
    return metric, J, P, X1, X2


def suite_transport(cfg: SuiteConfig, rec: Recorder, rng: np.random.Generator) -> None:
    h = cfg.hbar
    metric, J, P, X1, X2 = _j_setup(rng)

    def holonomy():
        slope, res, nonscalar = oracles.holonomy_slope(P, X1, X2, hbar=h)
        ok = slope >= 2.9 and max(nonscalar) < 1e-8
        return Outcome(max(res), ok, f"slope {slope:.3f}")

    def holonomy_complex():
        slope, res, nonscalar = oracles.holonomy_slope(P, X1 + 1j * X2, X2 - 0.5j * X1, hbar=h)
        return Outcome(max(res), slope >= 2.9 and max(nonscalar) < 1e-8, f"slope {slope:.3f}")

    def infinitesimal():
        Pg = random_polarization(metric, rng, in_j=False)
        f = random_multivector(4, rng, hbar=h)
        psi = polarized_basis(Pg, h)[1].psi
        slope, res = oracles.infinitesimal_compatibility(f, psi, Pg, X1)
        return Outcome(res[-1], slope >= 1.9, f"slope {slope:.3f}")

    def along_geodesic():
        path = geodesic_path(J, 0.5 * X1)
        worst = 0.0
        for k in range(max(1, cfg.samples // 5)):
            f = random_multivector(4, rng, hbar=h)
            psi = polarized_basis(P, h)[k % 4].psi
            worst = max(worst, oracles.path_compatibility(f, psi, path))
        return worst

    def pairing():
        path = geodesic_path(J, 0.5 * X1)
        return _max(oracles.pairing_drift(s.psi, path) for s in polarized_basis(P, h))

    rec.check("holonomy matches the curvature", "transport.holonomy", holonomy, m=4)
    rec.check("holonomy off the real locus", "transport.holonomy_complex", holonomy_complex, m=4)
    rec.check("first-order compatibility", "transport.infinitesimal", infinitesimal, m=4)
    rec.check("compatibility along a geodesic", "transport.compatibility", along_geodesic, tol=1e-6, m=4)
    rec.check("transport preserves the pairing", "transport.pairing", pairing, tol=1e-8, m=4)


def suite_metaplectic(cfg: SuiteConfig, rec: Recorder, rng: np.random.Generator) -> None:
    h = cfg.hbar
    metric, J, P, X1, X2 = _j_setup(rng)
    psi = polarized_basis(P, h)[1].psi

    def triangle():
        out = oracles.triangle_loop(P, 0.4 * X1, 0.4 * X2, psi)
        ok = out["corrected"] <= 1e-6 and out["uncorrected"] >= 1e-5
        return Outcome(out["corrected"], ok, f"uncorrected deviation {out['uncorrected']:.3e}")

    def two_paths():
        out = oracles.two_path_agreement(P, 0.4 * X1, 0.3 * X2, psi)
        return out["corrected"]

    def unit_phase():
        out = oracles.triangle_loop(P, 0.3 * X2, 0.3 * X1, psi)
        return abs(abs(out["metaplectic_phase"]) - 1)

    rec.check("corrected triangle holonomy is trivial", "metaplectic.flat", triangle, tol=1e-6, m=4)
    rec.check("two paths give the same transport", "metaplectic.paths", two_paths, tol=1e-6, m=4)
    rec.check("phase has unit modulus on the real locus", "metaplectic.unit_phase", unit_phase, tol=1e-8, m=4)


# --------------------------------------------------------------------------- equivariance


def suite_equivariance(cfg: SuiteConfig, rec: Recorder, rng: np.random.Generator) -> None:
    h = cfg.hbar
    m = 4
    metric = Metric.identity(m)
    S = cfg.samples
    gammas = [rotation_in(metric, rng) for _ in range(S)]

    def functions():
        worst = 0.0
        for g in gammas:
            K = random_bivector(m, rng)
            f, k = random_multivector(m, rng, hbar=h), random_multivector(m, rng, hbar=h)
            act = lambda x: so_action_function(g, x)  # noqa: E731
            worst = max(worst,
                        _num_gap(act(poisson_bracket(f, k, metric)),
                                 poisson_bracket(act(f), act(k), metric)),
                        _num_gap(act(star_k(f, k, metric, K)),
                                 star_k(act(f), act(k), metric, transform_bivector(g, K))))
        return worst

    def clifford():
        worst = 0.0
        for g in gammas:
            K = random_bivector(m, rng)
            f = random_multivector(m, rng, hbar=h)
            lhs = so_action_clifford(g, quantize(f, K, metric), metric)
            rhs = quantize(so_action_function(g, f), transform_bivector(g, K), metric)
            worst = max(worst, _num_gap(lhs.as_multivector(), rhs.as_multivector()))
        return worst

    def kp():
        worst = 0.0
        for g in gammas:
            P = random_polarization(metric, rng, in_j=False)
            K, _ = kp_lambda(P)
            Kg, _ = kp_lambda(conjugate(P, g))
            worst = max(worst, float(np.max(np.abs(Kg.numeric - transform_bivector(g, K).numeric))))
        return worst

    def on_states():
        worst = 0.0
        for g in gammas:
            P = random_polarization(metric, rng, in_j=bool(rng.integers(0, 2)))
            psi = polarized_basis(P, h)[int(rng.integers(0, 4))].psi
            f = random_multivector(m, rng, hbar=h)
            lhs = so_action_section(g, star_on_state(f, psi, P))
            rhs = star_on_state(so_action_function(g, f), so_action_section(g, psi), conjugate(P, g))
            worst = max(worst, oracles.relative(lhs, rhs))
        return worst

    def rho_hat_composition():
        P = from_complex_structure(random_complex_structure(metric, rng))
        psi = polarized_basis(P, h)[1].psi
        worst = 0.0
        for g1, g2 in zip(gammas[: max(1, S // 5)], gammas[1: max(2, S // 5 + 1)]):
            s1, s2 = SpinElement.from_rotation(g1), SpinElement.from_rotation(g2)
            a = rho_hat(P, s1 * s2, psi)
            b = rho_hat(P, s1, rho_hat(P, s2, psi))
            worst = max(worst, oracles.relative(b, a))
        return worst

    def rho_composition():
        P = from_complex_structure(random_complex_structure(metric, rng))
        psi = polarized_basis(P, h)[1].psi
        s1, s2 = SpinElement.from_rotation(gammas[0]), SpinElement.from_rotation(gammas[-1])
        a = rho(P, s1 * s2, psi)
        b = rho(P, s1, rho(P, s2, psi))
        lam, left = oracles.scalar_part(b, a)
        res = left / a.norm()
        return Outcome(res, res <= 1e-6 and abs(abs(lam) - 1) <= 1e-6, f"scalar {lam:.6f}")

    rec.check("bracket and star product equivariance", "equivariance.functions", functions, m=m)
    rec.check("quantisation equivariance", "equivariance.clifford", clifford, m=m)
    rec.check("K_P equivariance", "equivariance.kp", kp, m=m)
    rec.check("star product on states equivariance", "equivariance.states", on_states, m=m)
    rec.check("spin representation composes", "equivariance.rho_hat", rho_hat_composition, tol=1e-6, m=m)
    rec.check("rotation action composes up to a phase", "equivariance.rho", rho_composition, tol=1e-6, m=m)


SUITE_FUNCTIONS = {
    "algebra": suite_algebra,
    "star": suite_star,
    "clifford": suite_clifford,
    "polarization": suite_polarization,
    "states": suite_states,
    "transport": suite_transport,
    "metaplectic": suite_metaplectic,
    "equivariance": suite_equivariance,
}


def run_suite(name: str, cfg: SuiteConfig) -> list[CheckRecord]:
    """Run one suite at min(cfg.m, its cap) with its own generator."""
    rec = Recorder(cfg.tol, min(cfg.m, SUITE_CAPS[name]))
    SUITE_FUNCTIONS[name](cfg, rec, suite_rng(cfg.seed, name))
    return rec.records
