"""Reproducible random inputs for the identity checks.

All helpers draw from a :class:`numpy.random.Generator` built on the PCG64
bit generator, so a seed fixes every sample on every platform.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .forms import Bivector, Metric, Rotation, random_rotation
from .multivector import Multivector
from .polarization import ComplexStructure, Polarization, conjugate, from_complex_structure
from .scalars import GaussianRational

__all__ = [
    "make_rng",
    "random_multivector",
    "random_bivector",
    "random_metric",
    "random_q_antisymmetric",
    "random_rotation",
    "standard_complex_structure",
    "random_complex_structure",
    "random_polarization",
    "rotation_in",
]


def make_rng(seed: int) -> np.random.Generator:
    """PCG64-backed generator; the algorithm is fixed so reports are portable."""
    return np.random.Generator(np.random.PCG64(seed))


def _small_gaussian_integer(rng: np.random.Generator, bound: int) -> GaussianRational:
    re, im = rng.integers(-bound, bound + 1, size=2)
    return GaussianRational(int(re), int(im))


def random_multivector(m: int, rng: np.random.Generator, *, terms: int | None = None,
                       formal: bool = False, hbar: float = 1.0, max_grade: int | None = None,
                       bound: int = 3) -> Multivector:
    """Random element with ``terms`` nonzero monomials (all of them by default).

    Formal samples have small Gaussian-integer coefficients so that exact
    arithmetic stays cheap; numeric samples have standard complex normal ones.
    """
    n = 1 << m
    masks = np.arange(n)
    if max_grade is not None:
        masks = np.array([a for a in masks if bin(a).count("1") <= max_grade])
    if terms is not None and terms < len(masks):
        masks = rng.choice(masks, size=terms, replace=False)
    coeffs = {}
    for mask in masks:
        if formal:
            c = _small_gaussian_integer(rng, bound)
            if c == 0:
                c = GaussianRational(1, 0)
        else:
            c = complex(rng.normal(), rng.normal())
        coeffs[int(mask)] = c
    return Multivector.from_masks(m, coeffs, formal=formal, hbar=hbar)


def random_bivector(m: int, rng: np.random.Generator, *, formal: bool = False,
                    bound: int = 2) -> Bivector:
    """Random K; exact Gaussian-integer entries when ``formal``."""
    if formal:
        K = np.empty((m, m), dtype=object)
        for i in range(m):
            K[i, i] = GaussianRational(0, 0)
            for j in range(i + 1, m):
                c = _small_gaussian_integer(rng, bound)
                K[i, j], K[j, i] = c, -c
        return Bivector(K)
    A = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return Bivector(0.5 * (A - A.T))


def random_metric(m: int, rng: np.random.Generator) -> Metric:
    """Random positive definite metric with dyadic entries (exactly symmetric)."""
    A = np.round(rng.normal(size=(m, m)) * 8) / 8
    q = A @ A.T + m * np.eye(m)
    return Metric(0.5 * (q + q.T))


def random_q_antisymmetric(metric: Metric, rng: np.random.Generator, *,
                           complex_part: float = 0.0, scale: float = 1.0) -> np.ndarray:
    """X with q X + X^T q = 0; an imaginary part of relative size ``complex_part``."""
    m = metric.m
    A = rng.normal(size=(m, m))
    if complex_part:
        A = A + 1j * complex_part * rng.normal(size=(m, m))
    A = scale * 0.5 * (A - A.T)
    return metric.qsharp @ A


def _orthonormal_basis(metric: Metric) -> np.ndarray:
    """Columns form a q-orthonormal basis (identity for the standard metric)."""
    if metric.is_identity():
        return np.eye(metric.m)
    L = np.linalg.cholesky(metric.numeric.real)
    return np.linalg.inv(L).T


def standard_complex_structure(metric: Metric) -> ComplexStructure:
    """Block-diagonal J in a q-orthonormal basis: e_{2k-1} -> e_{2k}."""
    m = metric.m
    if m % 2:
        raise ValueError("complex structures need an even dimension")
    J = np.zeros((m, m))
    for k in range(0, m, 2):
        J[k + 1, k] = 1.0
        J[k, k + 1] = -1.0
    F = _orthonormal_basis(metric)
    return ComplexStructure(F @ J @ np.linalg.inv(F), metric)


def random_complex_structure(metric: Metric, rng: np.random.Generator) -> ComplexStructure:
    """Compatible, positively oriented J obtained by rotating the standard one."""
    J0 = standard_complex_structure(metric)
    F = _orthonormal_basis(metric)
    R = random_rotation(metric.m, rng).gamma
    g = F @ R @ np.linalg.inv(F)
    return ComplexStructure(g @ J0.J @ np.linalg.inv(g), metric)


def random_polarization(metric: Metric, rng: np.random.Generator, *, in_j: bool = True,
                        scale: float = 0.4) -> Polarization:
    """Random P_J, or (``in_j=False``) a P_J moved off the real locus by a complex rotation."""
    P = from_complex_structure(random_complex_structure(metric, rng))
    if in_j:
        return P
    X = random_q_antisymmetric(metric, rng, complex_part=1.0, scale=scale)
    return conjugate(P, expm(X))


def rotation_in(metric: Metric, rng: np.random.Generator) -> Rotation:
    """Random element of SO(V, q)."""
    F = _orthonormal_basis(metric)
    R = random_rotation(metric.m, rng).gamma
    return Rotation(F @ R @ np.linalg.inv(F), metric)
