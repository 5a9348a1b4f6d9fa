from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermistar import (
    Bivector,
    GaussianRational,
    Metric,
    Multivector,
    apply_vector_field,
    fermi_derivative,
    hamiltonian_field,
    intertwiner,
    o_transport,
    poisson_bracket,
    random_bivector,
    random_metric,
    random_multivector,
    random_rotation,
    rotation_in,
    so_action_function,
    star_k,
    star_k_reference,
    transform_bivector,
    wedge,
)
from fermistar.forms import Rotation

from helpers import homogeneous, koszul, mono, rng_for, seeds

I2 = Metric.identity(2)
I4 = Metric.identity(4)
QUARTER = GaussianRational(Fraction(1, 4))


def th(mu, m, **kw):
    return Multivector.generator(mu, m, **kw)


# ----------------------------------------------------------------- types


def test_metric_invariants():
    rng = rng_for(0)
    q = random_metric(5, rng)
    assert np.allclose(q.numeric @ q.qsharp, np.eye(5), atol=1e-12)
    with pytest.raises(ValueError):
        Metric(np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        Metric(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_bivector_must_be_antisymmetric():
    with pytest.raises(ValueError):
        Bivector(np.array([[0.0, 1.0], [1.0, 0.0]]))
    K = random_bivector(4, rng_for(1))
    assert np.array_equal(K.numeric, -K.numeric.T)


def test_rotation_invariants():
    with pytest.raises(ValueError):
        Rotation(np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        Rotation(np.array([[1.0, 1.0], [0.0, 1.0]]))
    g = random_rotation(4, rng_for(2))
    assert np.allclose(g.gamma.T @ g.gamma, np.eye(4), atol=1e-12)


# ----------------------------------------------------------------- Poisson bracket


def test_bracket_examples():
    rng = rng_for(3)
    q = random_metric(3, rng)
    for mu, nu in itertools.product(range(1, 4), repeat=2):
        b = poisson_bracket(th(mu, 3), th(nu, 3), q)
        assert b.allclose(Multivector.scalar(0.5 * q.qsharp[mu - 1, nu - 1], 3), atol=1e-15)
    f = random_multivector(3, rng)
    assert poisson_bracket(Multivector.scalar(1, 3), f, q).is_zero()
    assert poisson_bracket(mono((1, 2), 2), mono((1, 2), 2), I2).is_zero()


def test_hamiltonian_field_examples():
    assert all(c.is_zero() for c in hamiltonian_field(Multivector.scalar(1, 3), Metric.identity(3)))
    c = hamiltonian_field(th(1, 3), Metric.identity(3))
    assert c[0] == Multivector.scalar(1, 3) and c[1].is_zero() and c[2].is_zero()


@given(seeds)
def test_hamiltonian_field_halved_is_bracket(seed):
    rng = rng_for(seed)
    q = random_metric(4, rng)
    f, g = random_multivector(4, rng, formal=True), random_multivector(4, rng, formal=True)
    half = GaussianRational(Fraction(1, 2))
    assert apply_vector_field(hamiltonian_field(f, q), g).scale(half) == poisson_bracket(f, g, q)


@given(seeds, st.sampled_from([2, 3, 4]))
def test_graded_jacobi(seed, m):
    rng = rng_for(seed)
    q = random_metric(m, rng)
    f, g, h = (homogeneous(random_multivector(m, rng, formal=True), rng) for _ in range(3))
    df, dg, dh = (max(x.degree, 0) for x in (f, g, h))
    total = (poisson_bracket(f, poisson_bracket(g, h, q), q) * (-1) ** (df * dh)
             + poisson_bracket(g, poisson_bracket(h, f, q), q) * (-1) ** (dg * df)
             + poisson_bracket(h, poisson_bracket(f, g, q), q) * (-1) ** (dh * dg))
    assert total.is_zero()


@given(seeds, st.sampled_from([2, 3, 4]))
def test_bracket_graded_leibniz(seed, m):
    rng = rng_for(seed)
    q = random_metric(m, rng)
    f, g = (homogeneous(random_multivector(m, rng, formal=True), rng) for _ in range(2))
    h = random_multivector(m, rng, formal=True)
    rhs = wedge(poisson_bracket(f, g, q), h) + wedge(g, poisson_bracket(f, h, q)) * koszul(f, g)
    assert poisson_bracket(f, wedge(g, h), q) == rhs


# ----------------------------------------------------------------- star product


def test_star_degree_one_pair():
    rng = rng_for(4)
    K = random_bivector(3, rng, formal=True)
    q = Metric.identity(3)
    lam = q.qsharp_exact + K.exact
    for mu, nu in itertools.product(range(3), repeat=2):
        a, b = th(mu + 1, 3, formal=True), th(nu + 1, 3, formal=True)
        expect = wedge(a, b) + a.like_scalar(lam[mu, nu] * QUARTER).shift_hbar(1)
        assert star_k(a, b, q, K) == expect


def test_star_unit():
    rng = rng_for(5)
    K = random_bivector(4, rng, formal=True)
    f = random_multivector(4, rng, formal=True)
    one = f.like_scalar(1)
    assert star_k(one, f, I4, K) == f and star_k(f, one, I4, K) == f


def test_star_square_of_generator():
    t = th(1, 2, hbar=0.8)
    assert star_k(t, t, I2, None).allclose(Multivector.scalar(0.2, 2, hbar=0.8))


def test_star_rejects_mismatched_dimension():
    with pytest.raises(Exception):
        star_k(th(1, 2), th(1, 3), I2, None)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_associativity_exhaustive(m):
    rng = rng_for(6 + m)
    K = random_bivector(m, rng, formal=True)
    q = Metric.identity(m)
    basis = [Multivector.from_masks(m, {A: 1}, formal=True) for A in range(1 << m)]
    for f, g, h in itertools.product(basis, repeat=3):
        assert star_k(star_k(f, g, q, K), h, q, K) == star_k(f, star_k(g, h, q, K), q, K)


@given(seeds, st.sampled_from([4, 6]))
def test_associativity_random(seed, m):
    rng = rng_for(seed)
    K = random_bivector(m, rng, formal=True)
    q = Metric.identity(m)
    f, g, h = (random_multivector(m, rng, formal=True) for _ in range(3))
    assert star_k(star_k(f, g, q, K), h, q, K) == star_k(f, star_k(g, h, q, K), q, K)


@given(seeds)
def test_associativity_general_metric_numeric(seed):
    rng = rng_for(seed)
    q = random_metric(4, rng)
    K = random_bivector(4, rng)
    f, g, h = (random_multivector(4, rng, hbar=0.7) for _ in range(3))
    lhs = star_k(star_k(f, g, q, K), h, q, K)
    assert lhs.allclose(star_k(f, star_k(g, h, q, K), q, K), rtol=1e-10, atol=1e-10)


@given(seeds, st.sampled_from([2, 3, 4]))
def test_direct_reference_agrees(seed, m):
    rng = rng_for(seed)
    q = random_metric(m, rng)
    K = random_bivector(m, rng, formal=True)
    f, g = (random_multivector(m, rng, formal=True, terms=4) for _ in range(2))
    assert star_k(f, g, q, K) == star_k_reference(f, g, q, K)


@given(seeds, st.sampled_from([2, 3, 4]))
def test_first_order_law(seed, m):
    rng = rng_for(seed)
    q = random_metric(m, rng)
    K = random_bivector(m, rng, formal=True)
    f, g = (homogeneous(random_multivector(m, rng, formal=True), rng) for _ in range(2))
    comm = star_k(f, g, q, K) - star_k(g, f, q, K) * koszul(f, g)
    assert comm.hbar_coefficient(0).is_zero()
    assert comm.hbar_coefficient(1) == poisson_bracket(f, g, q)


@given(seeds, st.sampled_from([2, 4, 6]))
def test_hbar_degree_bound(seed, m):
    rng = rng_for(seed)
    K = random_bivector(m, rng, formal=True)
    p = star_k(random_multivector(m, rng, formal=True), random_multivector(m, rng, formal=True),
               Metric.identity(m), K)
    assert p.hbar_low_degree >= 0 and p.hbar_degree <= m


@given(seeds, st.sampled_from([2, 3, 4]))
def test_product_rules_for_degree_one_factor(seed, m):
    # (a∧f)*g = a∧(f*g) + (-1)^|f| (hbar/4) q^{mu nu} a_mu f*(d_nu g)
    # f*(a∧g) = (-1)^|f| a∧(f*g) + (hbar/4) q^{mu nu} a_mu (d'_nu f)*g
    rng = rng_for(seed)
    q = random_metric(m, rng)
    qs = q.qsharp_exact
    a = random_multivector(m, rng, formal=True).grade(1)
    f = homogeneous(random_multivector(m, rng, formal=True), rng)
    g = random_multivector(m, rng, formal=True)
    s = lambda x, y: star_k(x, y, q, None)  # noqa: E731
    sign = (-1) ** max(f.degree, 0)
    c1, c2 = f.like_zero(), f.like_zero()
    for mu, nu in itertools.product(range(m), repeat=2):
        c = a.coefficient(1 << mu) * qs[mu, nu]
        if c != 0:
            c1 = c1 + s(f, fermi_derivative(nu + 1, g)).scale(c)
            c2 = c2 + s(fermi_derivative(nu + 1, f) * -sign, g).scale(c)
    assert s(wedge(a, f), g) == wedge(a, s(f, g)) + (c1 * sign).scale(QUARTER).shift_hbar(1)
    assert s(f, wedge(a, g)) == wedge(a, s(f, g)) * sign + c2.scale(QUARTER).shift_hbar(1)


# ----------------------------------------------------------------- intertwiners


def test_intertwiner_examples():
    rng = rng_for(7)
    K = random_bivector(2, rng, formal=True)
    K2 = random_bivector(2, rng, formal=True)
    f = random_multivector(2, rng, formal=True)
    assert intertwiner(K, K, f) == f
    low = random_multivector(2, rng, formal=True, max_grade=1)
    assert intertwiner(K, K2, low) == low
    out = intertwiner(K, K2, mono((1, 2), 2, formal=True))
    diff = (K2.exact - K.exact)[0, 1]
    assert out == mono((1, 2), 2, formal=True) + out.like_scalar(diff * QUARTER).shift_hbar(1)


@given(seeds, st.sampled_from([2, 4, 6]))
def test_intertwiner_is_an_isomorphism(seed, m):
    rng = rng_for(seed)
    q = Metric.identity(m)
    K, K2 = random_bivector(m, rng, formal=True), random_bivector(m, rng, formal=True)
    f, g = random_multivector(m, rng, formal=True), random_multivector(m, rng, formal=True)
    U = lambda x: intertwiner(K, K2, x)  # noqa: E731
    assert U(star_k(f, g, q, K)) == star_k(U(f), U(g), q, K2)
    assert intertwiner(K2, K, U(f)) == f


@given(seeds)
def test_o_transport_is_path_independent(seed):
    rng = rng_for(seed)
    K0, K1, K2, K3 = (random_bivector(4, rng, formal=True) for _ in range(4))
    f = random_multivector(4, rng, formal=True)
    assert o_transport([K0], f) == f
    assert o_transport([K0, K1, K3], f) == o_transport([K0, K2, K3], f) == intertwiner(K0, K3, f)
    assert intertwiner(K0, K2, f) == intertwiner(K1, K2, intertwiner(K0, K1, f))


def test_o_transport_empty_path():
    with pytest.raises(ValueError):
        o_transport([], Multivector.scalar(1, 2))


# ----------------------------------------------------------------- rotations


def test_rotation_identity_acts_trivially():
    f = random_multivector(4, rng_for(8))
    assert so_action_function(Rotation(np.eye(4)), f).allclose(f)


@given(seeds)
def test_rotation_equivariance(seed):
    rng = rng_for(seed)
    q = random_metric(4, rng)
    g = rotation_in(q, rng)
    K = random_bivector(4, rng)
    f, h = random_multivector(4, rng), random_multivector(4, rng)
    act = lambda x: so_action_function(g, x)  # noqa: E731
    assert act(poisson_bracket(f, h, q)).allclose(poisson_bracket(act(f), act(h), q), rtol=1e-10, atol=1e-10)
    assert act(star_k(f, h, q, K)).allclose(star_k(act(f), act(h), q, transform_bivector(g, K)),
                                            rtol=1e-10, atol=1e-10)
