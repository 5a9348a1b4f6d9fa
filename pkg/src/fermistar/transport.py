"""Parallel transport of polarised states and the metaplectic correction.

States move along a path P_t by d psi/dt = (hbar/4) M^{mu nu} nabla_mu nabla_nu psi
with M = (P ⊗ P)(dP/dt ⊗ 1) q^sharp, integrated with the classical fourth-order
Runge-Kutta scheme.  In the trivialisation nabla_mu = d_mu - hbar^{-1} q_{mu nu}
theta^nu this coefficient is the one that keeps states polarised:
nabla_{k'} of the increment equals nabla_{dP e_k'} psi.  The metaplectic correction transports a frame of im P_t by
dv/dt = (dP/dt) v and multiplies the state by the square root of the frame
determinant, with the branch tracked continuously.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import logm

from .forms import Metric, Rotation
from .hilbert import (
    PolarizedState,
    is_polarized,
    nabla_matrix,
    polarization_residual,
    so_action_section,
)
from .multivector import Multivector
from .polarization import ConjugationPath, Polarization, PolarizationError, conjugate, path_through

__all__ = [
    "TransportError",
    "BranchError",
    "TransportResult",
    "h_transport",
    "metaplectic_transport",
    "reference_frame",
    "SpinElement",
    "rho",
    "rho_hat",
    "DEFAULT_STEPS",
    "transport_coefficient",
    "transport_increment",
]

DEFAULT_STEPS = 200


class TransportError(ValueError):
    """Transport input is invalid (e.g. the start state is not polarised)."""


class BranchError(TransportError):
    """The square-root branch jumped by more than pi/2 within one step."""


@dataclass(frozen=True)
class TransportResult:
    """Transported state with diagnostics.

    ``residual`` is the polarisation residual of ``state`` at ``end``;
    ``error_estimate`` is the step-halving (Richardson) estimate of the
    integration error when requested.
    """

    state: Multivector
    metaplectic_phase: complex = 1.0
    steps: int = 0
    end: Polarization | None = field(default=None, repr=False)
    uncorrected: Multivector | None = field(default=None, repr=False)
    residual: float = 0.0
    error_estimate: float | None = None


@lru_cache(maxsize=32)
def _nabla_products(metric_id: int, metric: Metric, hbar: float):
    m = metric.m
    N = [nabla_matrix(metric, hbar, mu + 1) for mu in range(m)]
    return np.array([[N[a] @ N[b] for b in range(m)] for a in range(m)])


def transport_coefficient(hbar: float) -> float:
    """c in d psi = c (dP)^{ij} nabla_i nabla_j psi."""
    return hbar / 4


def transport_increment(P: Polarization, dP: np.ndarray, psi: Multivector) -> Multivector:
    """First-order change of a polarised state under P -> P + dP."""
    T = P.P @ dP @ P.metric.qsharp @ P.P.T
    NN = _nabla_products(id(P.metric), P.metric, psi.hbar)
    op = np.einsum("ab,abij->ij", T, NN)
    return Multivector.from_vector(psi.m, transport_coefficient(psi.hbar) * (op @ psi.vector),
                                   hbar=psi.hbar)


class _Generator:
    """d psi/dt as a matrix acting on coefficient vectors."""

    def __init__(self, path, metric: Metric, hbar: float):
        self.path = path
        self.metric = metric
        self.coeff = transport_coefficient(hbar)
        self.NN = _nabla_products(id(metric), metric, hbar)

    def __call__(self, k: int, s: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        Pt, dP = self.path.segment_P_and_dot(k, s)
        Mmat = Pt @ dP @ self.metric.qsharp @ Pt.T
        A = self.coeff * np.einsum("ab,abij->ij", Mmat, self.NN)
        return A, Pt, dP


def _rk4(gen: _Generator, steps: int, x: np.ndarray, frame=None, on_step=None):
    """Integrate segment by segment so no stage straddles a corner of the path."""
    h = 1.0 / steps
    for k in range(gen.path.segments):
        x, frame = _rk4_segment(gen, k, h, steps, x, frame, on_step)
    return x, frame


def _rk4_segment(gen, k, h, steps, x, frame, on_step):
    for i in range(steps):
        s = i * h
        A1, _, d1 = gen(k, s)
        A2, _, d2 = gen(k, s + h / 2)
        A4, P4, d4 = gen(k, s + h)
        k1 = A1 @ x
        k2 = A2 @ (x + h / 2 * k1)
        k3 = A2 @ (x + h / 2 * k2)
        k4 = A4 @ (x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if frame is not None:
            f1 = d1 @ frame
            f2 = d2 @ (frame + h / 2 * f1)
            f3 = d2 @ (frame + h / 2 * f2)
            f4 = d4 @ (frame + h * f3)
            frame = frame + h / 6 * (f1 + 2 * f2 + 2 * f3 + f4)
        if on_step is not None:
            on_step(P4, frame)
    return x, frame


def _as_path(path):
    if isinstance(path, (list, tuple)):
        return path_through(path)
    return path


def _start_state(path, psi) -> tuple[Multivector, Polarization]:
    start = path.polarization(0.0)
    state = psi.psi if isinstance(psi, PolarizedState) else psi
    if state.formal:
        raise TransportError("transport needs a numeric section")
    if not is_polarized(state, start, tol=1e-8):
        raise TransportError("the state is not polarised at the start of the path")
    return state, start


def _halving_estimate(gen, steps: int, x0: np.ndarray, x: np.ndarray) -> float:
    """Richardson estimate |x_h - x_{2h}| / 15 for a fourth-order method."""
    coarse, _ = _rk4(gen, max(steps // 2, 1), x0)
    return float(np.linalg.norm(x - coarse)) / 15


def h_transport(path, psi, steps: int | None = None, *, check: bool = False) -> TransportResult:
    """Parallel transport in the bundle of polarised states (no phase correction).

    ``path`` is a path object or a sequence of nearby polarisations (joined by
    :func:`path_through`); ``steps`` counts RK4 steps per path segment.  With
    ``check`` the integration is repeated at half the step count to estimate
    the error.
    """
    path = _as_path(path)
    state, _ = _start_state(path, psi)
    steps = DEFAULT_STEPS if steps is None else steps
    gen = _Generator(path, path.metric, state.hbar)
    x, _ = _rk4(gen, steps, state.vector)
    out = Multivector.from_vector(state.m, x, hbar=state.hbar)
    end = path.polarization(float(path.segments))
    estimate = _halving_estimate(gen, steps, state.vector, x) if check else None
    return TransportResult(out, 1.0, steps * path.segments, end, out,
                           polarization_residual(out, end), estimate)


def reference_frame(P: np.ndarray, E0: np.ndarray) -> np.ndarray:
    """Canonical frame of im P given a fixed frame E0: polar part of P E0."""
    F = P @ E0
    u, _, vh = np.linalg.svd(F, full_matrices=False)
    return u @ vh


def _frame_det(P: np.ndarray, V: np.ndarray, E0: np.ndarray) -> complex:
    R = reference_frame(P, E0)
    return complex(np.linalg.det(np.linalg.pinv(R) @ V))


class _SqrtTracker:
    """Continuous square root of a nonvanishing complex function sampled along a path."""

    def __init__(self, value: complex = 1.0):
        self.root = cmath.sqrt(value)
        self.arg = cmath.phase(value)

    def update(self, value: complex):
        if value == 0:
            raise BranchError("frame determinant vanished")
        new_arg = cmath.phase(value)
        jump = (new_arg - self.arg + np.pi) % (2 * np.pi) - np.pi
        if abs(jump) > np.pi / 2:
            raise BranchError("determinant phase jumped by more than pi/2; refine the path")
        self.arg += jump
        self.root = np.sqrt(abs(value)) * cmath.exp(0.5j * self.arg)


def metaplectic_transport(path, psi, steps: int | None = None, *,
                          check: bool = False) -> TransportResult:
    """Transport in the corrected bundle H ⊗ (det V)^{1/2}.

    The determinant line is trivialised by :func:`reference_frame` built from
    the start frame, so results from different paths with the same endpoints
    are directly comparable.
    """
    path = _as_path(path)
    state, start = _start_state(path, psi)
    steps = DEFAULT_STEPS if steps is None else steps
    gen = _Generator(path, path.metric, state.hbar)
    E0 = start.E
    tracker = _SqrtTracker(_frame_det(start.P, E0, E0))

    def on_step(Pt, V):
        tracker.update(_frame_det(Pt, V, E0))

    x, _ = _rk4(gen, steps, state.vector, frame=E0.astype(complex), on_step=on_step)
    raw = Multivector.from_vector(state.m, x, hbar=state.hbar)
    phase = complex(tracker.root)
    end = path.polarization(float(path.segments))
    out = raw * phase
    estimate = _halving_estimate(gen, steps, state.vector, x) if check else None
    return TransportResult(out, phase, steps * path.segments, end, raw,
                           polarization_residual(out, end), estimate)


@dataclass(frozen=True, eq=False)
class SpinElement:
    """Rotation together with a homotopy class of paths from the identity.

    ``generators`` [X_1, ..., X_k] stand for gamma = exp(X_1) ... exp(X_k) with
    the path that switches on exp(s X_k) first, then exp(s X_{k-1}), and so on.
    """

    generators: tuple
    metric: Metric

    @classmethod
    def from_rotation(cls, gamma: Rotation, metric: Metric | None = None) -> SpinElement:
        X = logm(gamma.gamma)
        if np.max(np.abs(X.imag)) > 1e-9:
            raise PolarizationError("rotation has eigenvalue -1; pass explicit generators")
        metric = metric or gamma.metric or Metric.identity(gamma.m)
        X = 0.5 * (X.real - X.real.T) if metric.is_identity() else X.real
        return cls((X,), metric)

    @property
    def rotation(self) -> Rotation:
        from scipy.linalg import expm

        g = np.eye(self.metric.m)
        for X in self.generators:
            g = g @ expm(X)
        return Rotation(g, self.metric)

    def __mul__(self, other: SpinElement) -> SpinElement:
        return SpinElement(tuple(self.generators) + tuple(other.generators), self.metric)


def _stage_paths(spin: SpinElement, P: Polarization):
    """Conjugation paths traversed from gamma P gamma^{-1} back to P, stage by stage."""
    from scipy.linalg import expm

    stages = []
    tail = np.eye(P.m)
    for X in reversed(spin.generators):
        stages.append((X, tail.copy()))
        tail = expm(X) @ tail
    # stage j moves exp(s X_j) h_j P h_j^{-1} exp(-s X_j) for s in [0, 1]
    paths = []
    for X, h in reversed(stages):
        base = conjugate(P, h)
        paths.append(ConjugationPath(base, [X, np.zeros_like(X)]))
    return paths


def rho(P: Polarization, gamma, psi, steps: int | None = None, *, path=None) -> Multivector:
    """rho_P(gamma) psi = U^H_{P <- gamma P gamma^{-1}} (gamma^H psi), defined up to a phase.

    By default the transport runs along the conjugation path that undoes the
    rotation stage by stage; ``path`` overrides it with any path from
    gamma P gamma^{-1} to P.
    """
    spin = gamma if isinstance(gamma, SpinElement) else SpinElement.from_rotation(gamma, P.metric)
    state = psi.psi if isinstance(psi, PolarizedState) else psi
    out = so_action_section(spin.rotation, state)
    if path is not None:
        return h_transport(path, out, steps).state
    for stage in _stage_paths(spin, P):
        out = h_transport(stage, out, steps).state
    return out


def _spin_phase(spin: SpinElement, P: Polarization) -> complex:
    """Square root of the frame determinant picked up by rho, branch fixed by the spin path.

    Along exp(s X) h conjugation the transported frame is h-conjugated and
    rotated by exp(-P_h X P_h), so its determinant is exp(-tr(P_h X)) with
    P_h = h P h^{-1}; undoing the push therefore contributes exp(+tr(P_h X)).
    """
    from scipy.linalg import expm

    total = 0.0 + 0.0j
    tail = np.eye(P.m)
    for X in reversed(spin.generators):
        Ph = tail @ P.P @ np.linalg.inv(tail)
        total += np.trace(Ph @ X)
        tail = expm(X) @ tail
    return complex(np.exp(0.5 * total))


def rho_hat(P: Polarization, spin, psi, steps: int | None = None) -> Multivector:
    """Metaplectically corrected rho_P for a spin element (no phase ambiguity)."""
    if isinstance(spin, Rotation):
        spin = SpinElement.from_rotation(spin, P.metric)
    return rho(P, spin, psi, steps) * _spin_phase(spin, P)
