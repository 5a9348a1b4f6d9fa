from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermistar import (
    BasisError,
    CliffordElement,
    Metric,
    Multivector,
    delta_function,
    orthonormal_frame,
    pair_supertrace,
    quantize,
    quantize_via_sw,
    random_bivector,
    random_metric,
    random_multivector,
    random_rotation,
    so_action_sw,
    star_k,
    star_via_kernel,
    sw_quantizer,
    symbol_via_supertrace,
    transform_bivector,
    triple_supertrace,
)

from helpers import rng_for, seeds


def test_quantize_via_sw_unit():
    q = Metric.identity(4)
    one = Multivector.scalar(1, 4, formal=True)
    assert quantize_via_sw(one, None, q) == CliffordElement.scalar(1, 4, formal=True)


@pytest.mark.parametrize("formal", [True, False])
def test_sw_route_matches_direct_quantisation(formal):
    rng = rng_for(11)
    q = Metric.identity(4)
    for _ in range(50):
        K = random_bivector(4, rng, formal=formal)
        f = random_multivector(4, rng, formal=formal, hbar=0.8)
        a = quantize_via_sw(f, K, q)
        b = quantize(f, K, q)
        if formal:
            assert a == b
        else:
            assert a.as_multivector().allclose(b.as_multivector(), rtol=1e-12, atol=1e-12)


@given(seeds)
def test_supertrace_symbol_inverts_sw_quantisation(seed):
    rng = rng_for(seed)
    q = Metric.identity(4)
    K = random_bivector(4, rng, formal=True)
    f = random_multivector(4, rng, formal=True)
    assert symbol_via_supertrace(quantize_via_sw(f, K, q), K, q) == f


def test_pair_supertrace_is_delta():
    rng = rng_for(12)
    for K in (None, random_bivector(2, rng)):
        lhs, rhs = pair_supertrace(K, Metric.identity(2), hbar=1.7)
        assert lhs.allclose(rhs, atol=1e-12)


def test_triple_supertrace_closed_form():
    lhs, rhs = triple_supertrace(Metric.identity(2), hbar=0.6)
    assert lhs.allclose(rhs, atol=1e-12)


def test_delta_function_shape():
    d = delta_function(2)
    assert d.m == 4 and d.degree == 2
    # (theta1 - theta3)(theta2 - theta4)
    expect = {0b0011: 1, 0b0110: 1, 0b1001: -1, 0b1100: 1}
    assert {int(B): complex(d.coefficient(B)) for B in d.support()} == expect


@pytest.mark.parametrize("m", [2, 4])
@pytest.mark.parametrize("hbar", [0.3, 1.0, 2.7])
def test_kernel_star_matches_formula(m, hbar):
    rng = rng_for(13 + m)
    q = Metric.identity(m)
    for _ in range(5):
        K = random_bivector(m, rng)
        f = random_multivector(m, rng, hbar=hbar)
        g = random_multivector(m, rng, hbar=hbar)
        assert star_via_kernel(f, g, K, q).allclose(star_k(f, g, q, K), rtol=1e-10, atol=1e-10)


def test_kernel_unit():
    q = Metric.identity(4)
    one = Multivector.scalar(1, 4)
    assert star_via_kernel(one, one, None, q).allclose(one, atol=1e-13)


def test_linear_kernel_agrees_at_zero_bivector():
    rng = rng_for(14)
    q = Metric.identity(4)
    f, g = random_multivector(4, rng), random_multivector(4, rng)
    assert star_via_kernel(f, g, None, q, kernel="linear").allclose(star_k(f, g, q, None), atol=1e-12)


def test_non_orthonormal_metric_rejected():
    q = random_metric(4, rng_for(15))
    with pytest.raises(BasisError):
        sw_quantizer(None, q)
    with pytest.raises(BasisError):
        star_via_kernel(Multivector.scalar(1, 4), Multivector.scalar(1, 4), None, q)


def test_orthonormal_frame():
    q = random_metric(4, rng_for(16))
    L = orthonormal_frame(q)
    assert np.allclose(L.T @ q.numeric @ L, np.eye(4))


@settings(max_examples=10)
@given(seeds, st.sampled_from([0.5, 1.0]))
def test_sw_quantiser_equivariance(seed, hbar):
    rng = rng_for(seed)
    q = Metric.identity(4)
    gamma = random_rotation(4, rng)
    K = random_bivector(4, rng)
    diff = so_action_sw(gamma, sw_quantizer(K, q, hbar=hbar)) - \
        sw_quantizer(transform_bivector(gamma, K), q, hbar=hbar)
    assert all(x.as_multivector().norm() < 1e-10 for x in diff.parts.values())
