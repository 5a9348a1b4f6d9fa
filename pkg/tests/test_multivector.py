from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermistar import (
    DimensionError,
    Multivector,
    ParityError,
    berezin_integral,
    diagonal_pullback,
    exp_even,
    fermi_derivative,
    graded_flip,
    random_multivector,
    signed_derivative,
    slot_derivative,
    tensor_embed,
    tri_diagonal_pullback,
    triple_embed,
    wedge,
)

from helpers import homogeneous, koszul, mono, rng_for, seeds

th = lambda mu, m, **kw: Multivector.generator(mu, m, **kw)  # noqa: E731


# ----------------------------------------------------------------- examples


def test_wedge_examples():
    assert wedge(th(1, 2), th(2, 2)) == mono((1, 2), 2)
    assert wedge(th(2, 2), th(1, 2)) == mono((1, 2), 2, -1)
    one = Multivector.scalar(1, 2)
    assert wedge(one + th(1, 2), one + th(1, 2)) == one + th(1, 2) * 2


def test_derivative_examples():
    assert fermi_derivative(1, th(1, 2)) == Multivector.scalar(1, 2)
    assert fermi_derivative(2, mono((1, 2), 2)) == th(1, 2) * -1
    assert fermi_derivative(1, mono((1, 2, 3), 3)) == mono((2, 3), 3)
    assert signed_derivative(1, th(1, 2)) == Multivector.scalar(1, 2)
    assert signed_derivative(2, mono((1, 2), 2)) == th(1, 2)
    assert signed_derivative(1, Multivector.scalar(3, 2)).is_zero()


def test_derivative_index_checked():
    with pytest.raises(IndexError):
        fermi_derivative(3, th(1, 2))


def test_berezin_examples():
    assert complex(berezin_integral(mono((1, 2), 2))) == 1
    assert complex(berezin_integral(th(1, 2))) == 0
    f = Multivector.scalar(3, 2) + mono((1, 2), 2, 5)
    assert complex(berezin_integral(f)) == 5


def test_berezin_top_monomial_formal():
    top = Multivector.monomial(range(1, 6), 5, formal=True)
    value = berezin_integral(top)
    assert complex(value.evaluate(1.0) if hasattr(value, "evaluate") else value) == 1


def test_exp_even_examples():
    assert exp_even(Multivector.zero(2)) == Multivector.scalar(1, 2)
    c = 2.5
    assert exp_even(mono((1, 2), 2, c)).allclose(Multivector.scalar(1, 2) + mono((1, 2), 2, c))
    f = mono((1, 2), 4) + mono((3, 4), 4)
    expect = Multivector.scalar(1, 4) + mono((1, 2), 4) + mono((3, 4), 4) + mono((1, 2, 3, 4), 4)
    assert exp_even(f).allclose(expect)


def test_exp_even_rejects_odd():
    with pytest.raises(ParityError):
        exp_even(th(1, 2))


def test_exp_even_scalar_part():
    f = Multivector.scalar(0.5, 2) + mono((1, 2), 2)
    assert exp_even(f).allclose((Multivector.scalar(1, 2) + mono((1, 2), 2)) * np.exp(0.5))


def test_embedding_examples():
    one = Multivector.scalar(1, 2)
    assert tensor_embed(th(1, 2), one).as_multivector() == th(1, 4)
    assert tensor_embed(one, th(1, 2)).as_multivector() == th(3, 4)
    F = tensor_embed(th(1, 2), th(2, 2))
    assert slot_derivative(2, 2, F).as_multivector() == tensor_embed(th(1, 2), one).as_multivector() * -1


def test_pullback_examples():
    assert diagonal_pullback(tensor_embed(th(1, 2), th(2, 2))) == mono((1, 2), 2)
    assert diagonal_pullback(tensor_embed(th(1, 2), th(1, 2))).is_zero()


def test_flip_examples():
    one = Multivector.scalar(1, 2)
    F = tensor_embed(th(1, 2), th(2, 2))
    assert graded_flip(F).as_multivector() == tensor_embed(th(2, 2), th(1, 2)).as_multivector() * -1
    f = th(1, 2) + mono((1, 2), 2)
    assert graded_flip(tensor_embed(one, f)).as_multivector() == tensor_embed(f, one).as_multivector()


def test_mismatched_operands():
    with pytest.raises(DimensionError):
        wedge(th(1, 2), th(1, 3))


def test_json_schema_example():
    obj = {"m": 4, "mode": "numeric", "hbar": 0.5,
           "terms": [{"mask": [1, 2], "re": 1.0, "im": 0.0}]}
    f = Multivector.from_json(obj)
    assert f == mono((1, 2), 4, hbar=0.5)
    g = Multivector.from_json({"m": 2, "mode": "formal",
                               "terms": [{"mask": [], "laurent": {"-1": [1, 0], "0": ["1/3", 2]}}]})
    assert g.hbar_low_degree == -1
    assert Multivector.from_json(g.to_json()) == g


@pytest.mark.parametrize("bad, where", [
    ({"m": 2, "terms": [{"mask": [2, 1]}]}, "terms[0]"),
    ({"m": 2, "terms": [{"mask": [1]}, {"mask": [1]}]}, "terms[1]"),
    ({"m": 2, "terms": [{"mask": [3]}]}, "terms[0]"),
    ({"terms": []}, "missing"),
])
def test_json_diagnostics(bad, where):
    with pytest.raises(ValueError, match=where.replace("[", r"\[").replace("]", r"\]")):
        Multivector.from_json(bad)


def test_numeric_pruning_keeps_genuine_small_values():
    f = Multivector.from_masks(2, {0: 1.0, 3: 1e-10})
    assert f.coefficient(3) == pytest.approx(1e-10)


# ----------------------------------------------------------------- exhaustive small m


@pytest.mark.parametrize("m", [1, 2, 3])
def test_leibniz_identity_exhaustive(m):
    basis = [Multivector.from_masks(m, {A: 1}, formal=True) for A in range(1 << m)]
    for f, g in itertools.product(basis, repeat=2):
        F = tensor_embed(f, g)
        for mu in range(1, m + 1):
            lhs = fermi_derivative(mu, diagonal_pullback(F))
            rhs = diagonal_pullback(slot_derivative(1, mu, F) + slot_derivative(2, mu, F))
            assert lhs == rhs


# ----------------------------------------------------------------- properties


@given(seeds, st.sampled_from([2, 3, 4, 5, 6]))
def test_wedge_associative(seed, m):
    rng = rng_for(seed)
    f, g, h = (random_multivector(m, rng, formal=True, terms=6) for _ in range(3))
    assert wedge(wedge(f, g), h) == wedge(f, wedge(g, h))


@given(seeds, st.sampled_from([2, 3, 4, 5]))
def test_wedge_graded_commutative(seed, m):
    rng = rng_for(seed)
    f = homogeneous(random_multivector(m, rng, formal=True), rng)
    g = homogeneous(random_multivector(m, rng, formal=True), rng)
    assert wedge(f, g) == wedge(g, f) * koszul(f, g)


@given(seeds, st.sampled_from([4, 5, 6]))
def test_leibniz_identity_random(seed, m):
    rng = rng_for(seed)
    F = tensor_embed(random_multivector(m, rng, formal=True, terms=5),
                     random_multivector(m, rng, formal=True, terms=5))
    mu = int(rng.integers(1, m + 1))
    assert fermi_derivative(mu, diagonal_pullback(F)) == \
        diagonal_pullback(slot_derivative(1, mu, F) + slot_derivative(2, mu, F))


@given(seeds)
def test_pullback_of_embedding_is_wedge(seed):
    rng = rng_for(seed)
    f, g = random_multivector(4, rng), random_multivector(4, rng)
    assert diagonal_pullback(tensor_embed(f, g)).allclose(wedge(f, g))


@given(seeds)
def test_flip_is_invisible_after_pullback(seed):
    rng = rng_for(seed)
    F = tensor_embed(random_multivector(3, rng, formal=True), random_multivector(3, rng, formal=True))
    F = F + tensor_embed(random_multivector(3, rng, formal=True), random_multivector(3, rng, formal=True))
    assert diagonal_pullback(graded_flip(F)) == diagonal_pullback(F)


@given(seeds)
def test_embedding_degree_and_koszul_sign(seed):
    rng = rng_for(seed)
    f = homogeneous(random_multivector(3, rng, formal=True), rng)
    g = homogeneous(random_multivector(3, rng, formal=True), rng)
    F = tensor_embed(f, g)
    if not F.is_zero():
        assert F.degrees() == {f.degree + g.degree}
    mu = int(rng.integers(1, 4))
    sign = (-1) ** max(f.degree, 0)
    assert slot_derivative(2, mu, F).as_multivector() == \
        tensor_embed(f, fermi_derivative(mu, g)).as_multivector() * sign


@given(seeds, st.sampled_from([2, 3, 4]))
def test_tri_diagonal_coherence(seed, m):
    rng = rng_for(seed)
    f, g, h = (random_multivector(m, rng, formal=True) for _ in range(3))
    T = triple_embed(f, g, h)
    assert tri_diagonal_pullback(T, m, "left") == tri_diagonal_pullback(T, m, "right")
    assert tri_diagonal_pullback(T, m, "left") == wedge(wedge(f, g), h)


@given(seeds, st.sampled_from([2, 3, 4]))
def test_derivative_is_a_superderivation(seed, m):
    rng = rng_for(seed)
    f = homogeneous(random_multivector(m, rng, formal=True), rng)
    g = random_multivector(m, rng, formal=True)
    mu = int(rng.integers(1, m + 1))
    sign = (-1) ** max(f.degree, 0)
    assert fermi_derivative(mu, wedge(f, g)) == \
        wedge(fermi_derivative(mu, f), g) + wedge(f, fermi_derivative(mu, g)) * sign


@given(seeds, st.floats(min_value=0.2, max_value=3.0))
def test_formal_evaluation_commutes_with_wedge(seed, h):
    rng = rng_for(seed)
    f = random_multivector(4, rng, formal=True).shift_hbar(-1)
    g = random_multivector(4, rng, formal=True).shift_hbar(2)
    assert wedge(f, g).evaluate(h).allclose(wedge(f.evaluate(h), g.evaluate(h)), rtol=1e-10, atol=1e-10)


@given(seeds, st.booleans())
def test_json_round_trip(seed, formal):
    rng = rng_for(seed)
    f = random_multivector(4, rng, formal=formal, hbar=0.7)
    if formal:
        f = f.shift_hbar(-1) + random_multivector(4, rng, formal=True)
    assert Multivector.from_json(f.to_json()) == f
