"""Acceptance criteria, one test per criterion.

Each test records a one-line summary that the terminal summary prints as
``criterion N: PASS/FAIL ...``.
"""

from __future__ import annotations

import itertools
import time

import numpy as np

from fermistar import (
    CliffordElement,
    Metric,
    Multivector,
    SpinElement,
    clifford_mul,
    complex_frame_example,
    conjugate,
    from_complex_structure,
    geodesic_path,
    intertwiner,
    is_polarized,
    kp_lambda,
    make_rng,
    poisson_bracket,
    polarization_residual,
    polarized_basis,
    prequantum_op,
    quantize,
    quantize_via_sw,
    random_bivector,
    random_complex_structure,
    random_metric,
    random_multivector,
    random_polarization,
    random_q_antisymmetric,
    rho_hat,
    rotation_in,
    so_action_clifford,
    so_action_function,
    so_action_section,
    star_k,
    star_on_state,
    star_via_kernel,
    supertrace,
    symbol,
    transform_bivector,
)
from fermistar.verify import oracles


def record(acceptance, number: int, passed: bool, summary: str):
    acceptance[number] = (bool(passed), summary)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {summary}")
    assert passed, summary


def gap(a: Multivector, b: Multivector) -> float:
    return float(np.max(np.abs((a - b).vector), initial=0.0))


def unit(f: Multivector) -> Multivector:
    return f * (1.0 / f.norm())


def j_setup(seed: int):
    rng = make_rng(seed)
    q = Metric.identity(4)
    J = random_complex_structure(q, rng)
    P = from_complex_structure(J)
    return rng, q, J, P, random_q_antisymmetric(q, rng), random_q_antisymmetric(q, rng)


def test_criterion_01_worked_example(acceptance):
    start = time.perf_counter()
    worst, flags = 0.0, True
    for hbar in (0.5, 1.0, 2.0):
        ex = complex_frame_example(hbar)
        out = star_on_state(ex.f, ex.psi, ex.P)
        pre = prequantum_op(ex.f, ex.psi, ex.metric)
        worst = max(worst, oracles.relative(out, ex.expected_star), oracles.relative(pre, ex.expected_prequantum))
        flags = flags and is_polarized(out, ex.P) and not is_polarized(pre, ex.P)
    elapsed = time.perf_counter() - start
    record(acceptance, 1, worst <= 1e-12 and flags and elapsed < 1.0,
           f"worked example: max relative error {worst:.1e}, polarisation flags {'ok' if flags else 'wrong'}, "
           f"{elapsed:.2f}s")


def test_criterion_02_star_algebra(acceptance):
    start = time.perf_counter()
    rng = make_rng(2)
    failures = 0
    triples = 0
    for m in (1, 2, 3):
        q = Metric.identity(m)
        K = random_bivector(m, rng, formal=True)
        monos = [Multivector.from_masks(m, {A: 1}, formal=True) for A in range(1 << m)]
        for f, g, h in itertools.product(monos, repeat=3):
            triples += 1
            failures += star_k(star_k(f, g, q, K), h, q, K) != star_k(f, star_k(g, h, q, K), q, K)
    law_failures = 0
    degree_excess = 0
    for m in (4, 6):
        q = Metric.identity(m)
        for _ in range(100):
            K = random_bivector(m, rng, formal=True)
            f, g, h = (random_multivector(m, rng, formal=True) for _ in range(3))
            fg = star_k(f, g, q, K)
            triples += 1
            failures += star_k(fg, h, q, K) != star_k(f, star_k(g, h, q, K), q, K)
            degree_excess = max(degree_excess, fg.hbar_degree - m, -fg.hbar_low_degree)
            fh, gh = f.grade(int(rng.integers(0, m + 1))), g.grade(int(rng.integers(0, m + 1)))
            sign = (-1) ** (max(fh.degree, 0) * max(gh.degree, 0))
            comm = star_k(fh, gh, q, K) - star_k(gh, fh, q, K) * sign
            law_failures += not (comm.hbar_coefficient(0).is_zero()
                                 and comm.hbar_coefficient(1) == poisson_bracket(fh, gh, q))
    elapsed = time.perf_counter() - start
    ok = failures == 0 and law_failures == 0 and degree_excess <= 0 and elapsed < 30
    record(acceptance, 2, ok,
           f"associativity on {triples} triples ({failures} failures), first-order law failures {law_failures}, "
           f"hbar degree excess {degree_excess}, {elapsed:.1f}s")


def test_criterion_03_intertwiner(acceptance):
    rng = make_rng(3)
    q = Metric.identity(4)
    failures = cocycle_failures = 0
    for _ in range(100):
        K, K1, K2 = (random_bivector(4, rng, formal=True) for _ in range(3))
        f, g = random_multivector(4, rng, formal=True), random_multivector(4, rng, formal=True)
        failures += intertwiner(K, K2, star_k(f, g, q, K)) != \
            star_k(intertwiner(K, K2, f), intertwiner(K, K2, g), q, K2)
        direct = intertwiner(K, K2, f)
        cocycle_failures += direct != intertwiner(K1, K2, intertwiner(K, K1, f))
        cocycle_failures += intertwiner(K2, K, direct) != f
    record(acceptance, 3, failures == 0 and cocycle_failures == 0,
           f"100 intertwiner instances at m=4: {failures} failures, cocycle failures {cocycle_failures}")


def test_criterion_04_clifford(acceptance):
    start = time.perf_counter()
    rng = make_rng(4)
    hom = roundtrip = 0
    for m in (1, 2, 3, 4):
        q = Metric.identity(m) if m < 3 else random_metric(m, rng)
        if m <= 3:
            monos = [Multivector.from_masks(m, {A: 1}, formal=True) for A in range(1 << m)]
            K = random_bivector(m, rng, formal=True)
            pairs = list(itertools.product(monos, repeat=2))
        else:
            pairs = []
        for _ in range(20):
            pairs.append((random_multivector(m, rng, formal=True), random_multivector(m, rng, formal=True)))
        for f, g in pairs:
            if m == 4:
                K = random_bivector(m, rng, formal=True)
            hom += clifford_mul(quantize(f, K, q), quantize(g, K, q), q) != quantize(star_k(f, g, q, K), K, q)
            roundtrip += symbol(quantize(f, K, q), K, q) != f
    table = 0.0
    for m in (2, 4):
        for A in range(1 << m):
            value = supertrace(CliffordElement.from_multivector(Multivector.from_masks(m, {A: 1}, hbar=0.7)))
            expect = (0.35j) ** (m // 2) if A == (1 << m) - 1 else 0
            table = max(table, abs(complex(value) - expect))
    sw = 0.0
    q4 = Metric.identity(4)
    for _ in range(20):
        K = random_bivector(4, rng)
        f = random_multivector(4, rng, hbar=0.9)
        sw = max(sw, gap(quantize_via_sw(f, K, q4).as_multivector(), quantize(f, K, q4).as_multivector()))
    kernel = 0.0
    for m in (2, 4):
        q = Metric.identity(m)
        for hbar in (0.3, 1.0, 2.7):
            for _ in range(3):
                K = random_bivector(m, rng)
                f, g = random_multivector(m, rng, hbar=hbar), random_multivector(m, rng, hbar=hbar)
                kernel = max(kernel, gap(star_via_kernel(f, g, K, q), star_k(f, g, q, K)))
    elapsed = time.perf_counter() - start
    ok = hom == 0 and roundtrip == 0 and table <= 1e-15 and sw <= 1e-12 and kernel <= 1e-10 and elapsed < 30
    record(acceptance, 4, ok,
           f"homomorphism failures {hom}, round-trip failures {roundtrip}, supertrace table {table:.1e}, "
           f"SW route {sw:.1e}, kernel route {kernel:.1e}, {elapsed:.1f}s")


def test_criterion_05_polarisation_preservation(acceptance):
    rng = make_rng(5)
    worst = 0.0
    count = 0
    for m in (4, 6):
        q = random_metric(m, rng)
        for in_j in (True, False):
            P = random_polarization(q, rng, in_j=in_j)
            basis = polarized_basis(P, 1.0)
            for _ in range(100):
                f = random_multivector(m, rng)
                for s in basis:
                    out = star_on_state(f, s.psi, P)
                    worst = max(worst, polarization_residual(out, P) / (f.norm() * s.psi.norm()))
                    count += 1
    record(acceptance, 5, worst < 1e-9,
           f"{count} products at m=4,6 (J-space and general P): max scaled residual {worst:.1e}")


def test_criterion_06_dirac(acceptance):
    rng = make_rng(6)
    q = random_metric(4, rng)
    worst = 0.0
    for _ in range(100):
        f, g, psi = (unit(random_multivector(4, rng, hbar=0.8)) for _ in range(3))
        worst = max(worst, oracles.dirac_residual(f, g, psi, q))
    record(acceptance, 6, worst <= 1e-10, f"100 unit-norm triples at m=4: max residual {worst:.1e}")


def test_criterion_07_holonomy(acceptance):
    start = time.perf_counter()
    _, _, _, P, X1, X2 = j_setup(7)
    slope, res, nonscalar = oracles.holonomy_slope(P, X1, X2, eps=(0.1, 0.05, 0.025))
    slope_c, res_c, nonscalar_c = oracles.holonomy_slope(P, X1 + 1j * X2, X2 - 0.5j * X1)
    elapsed = time.perf_counter() - start
    ok = min(slope, slope_c) >= 2.9 and max(nonscalar + nonscalar_c) < 1e-8 and elapsed < 60
    record(acceptance, 7, ok,
           f"log-holonomy residual slope {slope:.2f} (complex directions {slope_c:.2f}), "
           f"residuals {', '.join(f'{r:.1e}' for r in res)}, {elapsed:.1f}s")


def test_criterion_08_metaplectic(acceptance):
    _, _, _, P, X1, X2 = j_setup(8)
    psi = polarized_basis(P, 1.0)[1].psi
    tri = oracles.triangle_loop(P, 0.4 * X1, 0.4 * X2, psi)
    two = oracles.two_path_agreement(P, 0.4 * X1, 0.3 * X2, psi)
    ok = tri["corrected"] <= 1e-6 and tri["uncorrected"] >= 1e-5 and two["corrected"] <= 1e-6
    record(acceptance, 8, ok,
           f"triangle corrected {tri['corrected']:.1e} vs uncorrected {tri['uncorrected']:.1e}; "
           f"two paths corrected {two['corrected']:.1e} (uncorrected {two['uncorrected']:.1e})")


def test_criterion_09_compatibility(acceptance):
    rng, q, J, P, X1, _ = j_setup(9)
    Pg = random_polarization(q, rng, in_j=False)
    f = random_multivector(4, rng)
    slope, _ = oracles.infinitesimal_compatibility(f, polarized_basis(Pg, 1.0)[1].psi, Pg, X1)
    path = geodesic_path(J, 0.5 * X1)
    worst = 0.0
    for k in range(4):
        g = random_multivector(4, rng)
        worst = max(worst, oracles.path_compatibility(g, polarized_basis(P, 1.0)[k].psi, path))
    record(acceptance, 9, slope >= 1.9 and worst <= 1e-6,
           f"first-order slope {slope:.2f}, geodesic compatibility {worst:.1e}")


def test_criterion_10_equivariance(acceptance):
    rng = make_rng(10)
    q = Metric.identity(4)
    gammas = [rotation_in(q, rng) for _ in range(20)]
    worst = {"functions": 0.0, "clifford": 0.0, "kp": 0.0, "states": 0.0}
    for g in gammas:
        K = random_bivector(4, rng)
        f, k = random_multivector(4, rng), random_multivector(4, rng)
        act = lambda x: so_action_function(g, x)  # noqa: E731
        gK = transform_bivector(g, K)
        worst["functions"] = max(worst["functions"],
                                 gap(act(poisson_bracket(f, k, q)), poisson_bracket(act(f), act(k), q)),
                                 gap(act(star_k(f, k, q, K)), star_k(act(f), act(k), q, gK)))
        worst["clifford"] = max(worst["clifford"], gap(so_action_clifford(g, quantize(f, K, q), q).as_multivector(),
                                                       quantize(act(f), gK, q).as_multivector()))
        P = random_polarization(q, rng, in_j=bool(rng.integers(0, 2)))
        KP, _ = kp_lambda(P)
        worst["kp"] = max(worst["kp"], float(np.max(np.abs(
            kp_lambda(conjugate(P, g.gamma))[0].numeric - transform_bivector(g, KP).numeric))))
        psi = unit(polarized_basis(P, 1.0)[int(rng.integers(0, 4))].psi)
        lhs = so_action_section(g, star_on_state(f, psi, P))
        rhs = star_on_state(act(f), so_action_section(g, psi), conjugate(P, g.gamma))
        worst["states"] = max(worst["states"], gap(lhs, rhs))
    P = from_complex_structure(random_complex_structure(q, rng))
    psi = polarized_basis(P, 1.0)[1].psi
    comp = 0.0
    for g1, g2 in zip(gammas[:4], gammas[4:8]):
        s1, s2 = SpinElement.from_rotation(g1), SpinElement.from_rotation(g2)
        comp = max(comp, oracles.relative(rho_hat(P, s1, rho_hat(P, s2, psi)), rho_hat(P, s1 * s2, psi)))
    ok = max(worst.values()) <= 1e-10 and comp <= 1e-6
    record(acceptance, 10, ok,
           "20 rotations: " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
           + f"; spin composition {comp:.1e}")

