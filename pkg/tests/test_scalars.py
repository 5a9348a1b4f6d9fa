from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermistar import GaussianRational, Laurent, exact, exact_inverse, is_exact_zero

small = st.fractions(min_value=-20, max_value=20, max_denominator=12)
gauss = st.builds(GaussianRational, small, small)
laurent = st.builds(lambda cs, lo: Laurent(cs, lo), st.lists(gauss, max_size=4), st.integers(-2, 2))
hbars = st.floats(min_value=0.1, max_value=3.0)


def test_gaussian_rational_arithmetic():
    a = GaussianRational(Fraction(1, 2), 1)
    b = GaussianRational(0, Fraction(-1, 3))
    assert a * b == GaussianRational(Fraction(1, 3), Fraction(-1, 6))
    assert (a / b) * b == a
    assert a.conjugate() == GaussianRational(Fraction(1, 2), -1)
    assert complex(a) == 0.5 + 1j


def test_exact_is_bit_exact_for_floats():
    x = exact(0.1)
    assert x == GaussianRational(Fraction(0.1))
    assert exact(0) == 0 and is_exact_zero(exact(0.0))


def test_laurent_negative_powers():
    h = Laurent.hbar()
    inv = Laurent.hbar(-1)
    assert h * inv == Laurent.constant(1)
    p = Laurent({-1: 2, 1: 3})
    assert p.low_degree == -1 and p.degree == 1
    assert p.evaluate(2.0) == pytest.approx(1 + 6)


def test_exact_inverse():
    a = np.array([[GaussianRational(2), GaussianRational(1)], [GaussianRational(1), GaussianRational(1)]],
                 dtype=object)
    inv = exact_inverse(a)
    prod = a.dot(inv)
    assert all(prod[i, j] == (1 if i == j else 0) for i in range(2) for j in range(2))


@given(laurent, laurent, hbars)
def test_evaluation_is_a_ring_homomorphism(p, q, h):
    assert (p * q).evaluate(h) == pytest.approx(p.evaluate(h) * q.evaluate(h), rel=1e-9, abs=1e-9)
    assert (p + q).evaluate(h) == pytest.approx(p.evaluate(h) + q.evaluate(h), rel=1e-9, abs=1e-9)


@given(laurent, laurent, laurent)
def test_laurent_ring_laws(p, q, r):
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert p - p == Laurent()


@given(gauss, gauss)
def test_gaussian_division_inverts_multiplication(a, b):
    if b:
        assert (a * b) / b == a
