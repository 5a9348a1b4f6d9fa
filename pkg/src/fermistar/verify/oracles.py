"""Numerical experiments shared by the verification suites and the tests.

Each function returns residuals rather than booleans so callers can apply
their own tolerances.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from ..forms import Metric
from ..hilbert import (
    covariant_derivative,
    hermitian_pairing,
    polarization_residual,
    polarized_basis,
    prequantum_op,
    star_on_state,
)
from ..multivector import Multivector
from ..polarization import ConjugationPath, Polarization, conjugate, curvature_form, kp_lambda
from ..star import intertwiner, poisson_bracket
from ..transport import h_transport, metaplectic_transport, transport_increment

__all__ = [
    "relative",
    "fitted_slope",
    "dirac_residual",
    "preservation_residual",
    "parallelogram_holonomy",
    "holonomy_slope",
    "infinitesimal_compatibility",
    "path_compatibility",
    "triangle_loop",
    "two_path_agreement",
    "scalar_part",
]


def relative(a: Multivector, b: Multivector) -> float:
    """|a - b| / max(|b|, 1e-300)."""
    return (a - b).norm() / max(b.norm(), 1e-300)


def fitted_slope(eps, residuals) -> float:
    """Least-squares slope of log(residual) against log(eps)."""
    return float(np.polyfit(np.log(eps), np.log(residuals), 1)[0])


def scalar_part(state: Multivector, reference: Multivector) -> tuple[complex, float]:
    """Best scalar lam with state ≈ lam * reference and the leftover norm."""
    u, v = reference.vector, state.vector
    lam = complex(np.vdot(u, v) / np.vdot(u, u))
    return lam, float(np.linalg.norm(v - lam * u))


def dirac_residual(f: Multivector, g: Multivector, psi: Multivector, metric: Metric) -> float:
    """|[f^, g^] psi - hbar ({f, g})^ psi| for homogeneous f, g (graded commutator)."""
    h = psi.hbar
    total = 0.0
    for fp in (f.even_part(), f.odd_part()):
        for gp in (g.even_part(), g.odd_part()):
            if fp.is_zero() or gp.is_zero():
                continue
            sign = -1 if fp.parity() and gp.parity() else 1
            lhs = prequantum_op(fp, prequantum_op(gp, psi, metric), metric) - \
                prequantum_op(gp, prequantum_op(fp, psi, metric), metric) * sign
            rhs = prequantum_op(poisson_bracket(fp, gp, metric), psi, metric) * h
            total = max(total, (lhs - rhs).norm())
    return total


def preservation_residual(f: Multivector, psi: Multivector, P: Polarization) -> float:
    """max_i' |nabla_{e_i'}(f *_P psi)| / (|f| |psi|)."""
    out = star_on_state(f, psi, P)
    return polarization_residual(out, P) / max(f.norm() * psi.norm(), 1e-300)


def _centred_loop(P: Polarization, X1: np.ndarray, X2: np.ndarray, eps: float) -> ConjugationPath:
    corners = [-X1 - X2, X1 - X2, X1 + X2, -X1 + X2]
    nodes = [0.5 * eps * c for c in corners]
    return ConjugationPath(P, nodes + [nodes[0]])


def parallelogram_holonomy(P: Polarization, X1: np.ndarray, X2: np.ndarray, eps: float, *,
                           hbar: float = 1.0, index: int = 0, steps: int = 60) -> dict:
    """Transport a basis state around the loop with sides eps[X1, P] and eps[X2, P].

    The loop is centred at P (corners exp(eps(±X1 ± X2)/2) P exp(-...)), so
    the curvature is sampled at the centre of the enclosed patch.  Returns
    log of the holonomy scalar, -F(eps dP1, eps dP2), their difference and the
    non-scalar part of the holonomy.
    """
    loop = _centred_loop(P, X1, X2, eps)
    start = polarized_basis(loop.start, hbar)[index].psi
    end = h_transport(loop, start, steps).state
    lam, leftover = scalar_part(end, start)
    dP1 = eps * (X1 @ P.P - P.P @ X1)
    dP2 = eps * (X2 @ P.P - P.P @ X2)
    F = curvature_form(P.P, dP1, dP2)
    return {"log_holonomy": complex(np.log(lam)), "minus_F": -F,
            "residual": abs(np.log(lam) + F), "nonscalar": leftover / start.norm()}


def holonomy_slope(P: Polarization, X1: np.ndarray, X2: np.ndarray, eps=(0.1, 0.05, 0.025), *,
                   hbar: float = 1.0, steps: int = 60) -> tuple[float, list, list]:
    """Slope of |log hol + F| against eps, with the residuals and non-scalar parts."""
    runs = [parallelogram_holonomy(P, X1, X2, e, hbar=hbar, steps=steps) for e in eps]
    res = [r["residual"] for r in runs]
    return fitted_slope(eps, res), res, [r["nonscalar"] for r in runs]


def infinitesimal_compatibility(f: Multivector, psi: Multivector, P: Polarization, X: np.ndarray,
                                eps=(1e-2, 1e-3, 1e-4)) -> tuple[float, list]:
    """Finite-difference residual of the first-order compatibility identity.

    With P_eps = exp(eps X) P exp(-eps X) and dP = eps [X, P]:
    f *_{P_eps} psi - f *_P psi versus d(f *_P psi) - (df) *_P psi - f *_P (d psi),
    where d on states is the transport increment and df = U^O_{K_eps, K} f - f.
    Returns the fitted slope of the residual (2 for an O(eps^2) remainder).
    """
    K0, _ = kp_lambda(P)
    base = star_on_state(f, psi, P)
    res = []
    for e in eps:
        dP = e * (X @ P.P - P.P @ X)
        P1 = conjugate(P, expm(e * X))
        K1, _ = kp_lambda(P1)
        lhs = star_on_state(f, psi, P1) - base
        df = intertwiner(K0, K1, f) - f
        rhs = transport_increment(P, dP, base) - star_on_state(df, psi, P) - \
            star_on_state(f, transport_increment(P, dP, psi), P)
        res.append((lhs - rhs).norm())
    return fitted_slope(eps, res), res


def path_compatibility(f: Multivector, psi: Multivector, path, steps: int | None = None) -> float:
    """Relative mismatch of U^H(f *_{P0} psi) and (U^O f) *_{P1} (U^H psi) along ``path``."""
    P0, P1 = path.start, path.end
    K0, _ = kp_lambda(P0)
    K1, _ = kp_lambda(P1)
    lhs = h_transport(path, star_on_state(f, psi, P0), steps).state
    rhs = star_on_state(intertwiner(K0, K1, f), h_transport(path, psi, steps).state, P1)
    return relative(lhs, rhs)


def triangle_loop(P: Polarization, X1: np.ndarray, X2: np.ndarray, psi: Multivector,
                  steps: int = 100) -> dict:
    """Corrected and uncorrected holonomy around P -> e^{X1}P -> e^{X2}P -> P."""
    zero = np.zeros_like(X1)
    loop = ConjugationPath(P, [zero, X1, X2, zero])
    corrected = metaplectic_transport(loop, psi, steps)
    lam_u, _ = scalar_part(corrected.uncorrected, psi)
    return {
        "corrected": relative(corrected.state, psi),
        "uncorrected": relative(corrected.uncorrected, psi),
        "uncorrected_phase": lam_u,
        "metaplectic_phase": corrected.metaplectic_phase,
    }


def two_path_agreement(P: Polarization, X: np.ndarray, Y: np.ndarray, psi: Multivector,
                       steps: int = 100) -> dict:
    """Compare transports P -> e^X P e^-X along a direct and a detour path."""
    zero = np.zeros_like(X)
    direct = ConjugationPath(P, [zero, X])
    detour = ConjugationPath(P, [zero, Y, 0.5 * (X + Y), X])
    a = metaplectic_transport(direct, psi, steps)
    b = metaplectic_transport(detour, psi, steps)
    ua = h_transport(direct, psi, steps).state
    ub = h_transport(detour, psi, steps).state
    return {"corrected": relative(a.state, b.state), "uncorrected": relative(ua, ub)}


def pairing_drift(psi: Multivector, path, steps: int | None = None) -> float:
    """Relative change of <psi, psi> under transport (paths inside the J-space)."""
    out = h_transport(path, psi, steps).state
    before = hermitian_pairing(psi, psi)
    return abs(hermitian_pairing(out, out) - before) / max(abs(before), 1e-300)


def curvature_anticommutator(psi: Multivector, metric: Metric) -> float:
    """max |{nabla_mu, nabla_nu} psi + 2 hbar^{-1} q_{mu nu} psi|."""
    worst = 0.0
    for mu in range(1, metric.m + 1):
        d_mu = covariant_derivative(mu, psi, metric)
        for nu in range(1, metric.m + 1):
            d_nu = covariant_derivative(nu, psi, metric)
            lhs = covariant_derivative(mu, d_nu, metric) + covariant_derivative(nu, d_mu, metric)
            rhs = psi * (-2 * metric.numeric[mu - 1, nu - 1] / psi.hbar)
            worst = max(worst, (lhs - rhs).norm())
    return worst


__all__ += ["pairing_drift", "curvature_anticommutator"]
