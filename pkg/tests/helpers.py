"""Shared strategies and small utilities for the test modules."""

from __future__ import annotations

from hypothesis import strategies as st

from fermistar import Multivector, make_rng

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def rng_for(seed: int):
    return make_rng(seed)


def mono(indices, m, coeff=1, **kw) -> Multivector:
    return Multivector.monomial(tuple(indices), m, coeff, **kw)


def homogeneous(f: Multivector, rng) -> Multivector:
    """Random homogeneous component of f (possibly of degree 0)."""
    return f.grade(int(rng.integers(0, f.m + 1)))


def koszul(f: Multivector, g: Multivector) -> int:
    return (-1) ** (max(f.degree, 0) * max(g.degree, 0))
