from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermistar import (
    Bivector,
    CliffordElement,
    Metric,
    Multivector,
    clifford_derivative,
    clifford_mul,
    fermi_derivative,
    graded_commutator,
    inner_derivative,
    intertwiner,
    quantize,
    random_bivector,
    random_metric,
    random_multivector,
    rotation_in,
    so_action_clifford,
    so_action_function,
    star_k,
    supertrace,
    symbol,
    transform_bivector,
    varrho0_apply,
)
from fermistar.forms import Rotation

from helpers import rng_for, seeds


def hat(mu, m, **kw):
    return CliffordElement.generator(mu, m, **kw)


def cl(f: Multivector) -> CliffordElement:
    return CliffordElement.from_multivector(f)


# ----------------------------------------------------------------- products


def test_generator_relation():
    rng = rng_for(0)
    q = random_metric(3, rng)
    h = 0.7
    for mu, nu in itertools.product(range(1, 4), repeat=2):
        a, b = hat(mu, 3, hbar=h), hat(nu, 3, hbar=h)
        anti = clifford_mul(a, b, q) + clifford_mul(b, a, q)
        expect = CliffordElement.scalar(0.5 * h * q.qsharp[mu - 1, nu - 1], 3, hbar=h)
        assert anti.as_multivector().allclose(expect.as_multivector(), atol=1e-15)


def test_square_of_generator_and_unit():
    h = 1.3
    t = hat(1, 2, hbar=h)
    assert clifford_mul(t, t, Metric.identity(2)).as_multivector().allclose(
        Multivector.scalar(0.25 * h, 2, hbar=h))
    x = cl(random_multivector(2, rng_for(1), hbar=h))
    one = CliffordElement.scalar(1, 2, hbar=h)
    assert clifford_mul(one, x, Metric.identity(2)) == x


@given(seeds)
def test_clifford_associative(seed):
    rng = rng_for(seed)
    q = random_metric(4, rng)
    x, y, z = (cl(random_multivector(4, rng, formal=True)) for _ in range(3))
    assert clifford_mul(clifford_mul(x, y, q), z, q) == clifford_mul(x, clifford_mul(y, z, q), q)


# ----------------------------------------------------------------- varrho0


def test_varrho0_examples():
    rng = rng_for(2)
    q = random_metric(3, rng)
    x = cl(random_multivector(3, rng))
    assert varrho0_apply(Multivector.scalar(1, 3), x, q) == x
    a = random_multivector(3, rng).grade(1)
    assert varrho0_apply(a, CliffordElement.scalar(1, 3), q).as_multivector().allclose(a)


@given(seeds)
def test_varrho0_supercommutator_with_derivative(seed):
    # [d_v, varrho0(f)] = varrho0(d_v f) as operators on Cl
    rng = rng_for(seed)
    q = random_metric(3, rng)
    f = random_multivector(3, rng, formal=True)
    x = cl(random_multivector(3, rng, formal=True))
    mu = int(rng.integers(1, 4))
    for fp in (f.even_part(), f.odd_part()):
        sign = -1 if fp.parity() else 1
        lhs = clifford_derivative(mu, varrho0_apply(fp, x, q)) - \
            varrho0_apply(fp, clifford_derivative(mu, x), q) * sign
        assert lhs == varrho0_apply(fermi_derivative(mu, fp), x, q)


# ----------------------------------------------------------------- quantisation


def test_quantize_distinct_monomials():
    # for an orthonormal metric distinct generators anticommute, so no ordering correction
    q = Metric.identity(4)
    for A in range(16):
        f = Multivector.from_masks(4, {A: 1}, formal=True)
        x = hat(1, 4, formal=True).like_scalar(1)
        for mu in range(1, 5):
            if A >> (mu - 1) & 1:
                x = clifford_mul(x, hat(mu, 4, formal=True), q)
        assert quantize(f, None, q) == x


def test_quantize_degree_one_ignores_k():
    rng = rng_for(4)
    q = random_metric(4, rng)
    K = random_bivector(4, rng, formal=True)
    a = random_multivector(4, rng, formal=True).grade(1)
    assert quantize(a, K, q) == quantize(a, None, q)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_quantize_multiplicative_exhaustive(m):
    q = Metric.identity(m)
    basis = [Multivector.from_masks(m, {A: 1}, formal=True) for A in range(1 << m)]
    for f, g in itertools.product(basis, repeat=2):
        assert clifford_mul(quantize(f, None, q), quantize(g, None, q), q) == quantize(star_k(f, g, q, None), None, q)


@given(seeds)
def test_quantize_multiplicative_random(seed):
    rng = rng_for(seed)
    q = random_metric(4, rng)
    K = random_bivector(4, rng, formal=True)
    f, g = random_multivector(4, rng, formal=True), random_multivector(4, rng, formal=True)
    assert clifford_mul(quantize(f, K, q), quantize(g, K, q), q) == quantize(star_k(f, g, q, K), K, q)


def test_quantize_multiplicative_m6():
    rng = rng_for(5)
    q = Metric.identity(6)
    f, g = random_multivector(6, rng, formal=True, terms=8), random_multivector(6, rng, formal=True, terms=8)
    assert clifford_mul(quantize(f, None, q), quantize(g, None, q), q) == quantize(star_k(f, g, q, None), None, q)


def test_symbol_examples():
    q = Metric.identity(2)
    assert symbol(CliffordElement.scalar(1, 2, formal=True), None, q) == Multivector.scalar(1, 2, formal=True)
    x = clifford_mul(hat(1, 2, formal=True), hat(2, 2, formal=True), q)
    assert symbol(x, None, q) == Multivector.monomial((1, 2), 2, formal=True)


@given(seeds, st.sampled_from([2, 3, 4]))
def test_symbol_inverts_quantize(seed, m):
    rng = rng_for(seed)
    q = random_metric(m, rng)
    K = random_bivector(m, rng, formal=True)
    f = random_multivector(m, rng, formal=True)
    assert symbol(quantize(f, K, q), K, q) == f


@given(seeds)
def test_derivative_routes_agree(seed):
    rng = rng_for(seed)
    q = random_metric(4, rng)
    f = random_multivector(4, rng, formal=True)
    x = quantize(f, None, q)
    for mu in range(1, 5):
        target = quantize(fermi_derivative(mu, f), None, q)
        assert clifford_derivative(mu, x) == target
        assert inner_derivative(mu, x, q) == target


@given(seeds)
def test_flat_transport_maps_to_constants(seed):
    rng = rng_for(seed)
    q = random_metric(4, rng)
    K0, K1 = random_bivector(4, rng, formal=True), random_bivector(4, rng, formal=True)
    f = random_multivector(4, rng, formal=True)
    assert quantize(intertwiner(K0, K1, f), K1, q) == quantize(f, K0, q)


# ----------------------------------------------------------------- supertrace


@pytest.mark.parametrize("m", [2, 4, 6])
def test_supertrace_table(m):
    h = 0.9
    for A in range(1 << m):
        value = complex(supertrace(cl(Multivector.from_masks(m, {A: 1}, hbar=h))))
        expect = (0.5j * h) ** (m // 2) if A == (1 << m) - 1 else 0
        assert value == pytest.approx(expect, abs=1e-15)


def test_supertrace_formal_top():
    top = cl(Multivector.monomial(range(1, 5), 4, formal=True))
    assert supertrace(top).evaluate(2.0) == pytest.approx(-1.0)


def test_supertrace_rejects_odd_dimension():
    with pytest.raises(Exception):
        supertrace(CliffordElement.scalar(1, 3))


@given(seeds)
def test_supertrace_vanishes_on_commutators(seed):
    rng = rng_for(seed)
    q = Metric.identity(4)
    x, y = (cl(random_multivector(4, rng, formal=True)) for _ in range(2))
    for xp in (x.even_part(), x.odd_part()):
        for yp in (y.even_part(), y.odd_part()):
            value = supertrace(graded_commutator(cl(xp), cl(yp), q))
            assert complex(value.evaluate(1.0)) == 0


# ----------------------------------------------------------------- rotations


def test_rotation_identity():
    x = cl(random_multivector(4, rng_for(6)))
    assert so_action_clifford(Rotation(np.eye(4)), x, Metric.identity(4)).as_multivector().allclose(x)


@given(seeds)
def test_rotation_is_an_automorphism_compatible_with_quantisation(seed):
    rng = rng_for(seed)
    q = random_metric(4, rng)
    g = rotation_in(q, rng)
    x, y = (cl(random_multivector(4, rng)) for _ in range(2))
    act = lambda z: so_action_clifford(g, z, q)  # noqa: E731
    assert act(clifford_mul(x, y, q)).as_multivector().allclose(
        clifford_mul(act(x), act(y), q).as_multivector(), rtol=1e-10, atol=1e-10)
    K = random_bivector(4, rng)
    f = random_multivector(4, rng)
    assert act(quantize(f, K, q)).as_multivector().allclose(
        quantize(so_action_function(g, f), transform_bivector(g, K), q).as_multivector(), rtol=1e-10, atol=1e-10)


def test_clifford_json_round_trip():
    x = cl(random_multivector(4, rng_for(7), formal=True))
    obj = x.to_json()
    assert obj["algebra"] == "clifford"
    back = Multivector.from_json(obj)
    assert isinstance(back, CliffordElement) and back == x
