"""Polarisations: projections onto transverse complex Lagrangian subspaces.

A :class:`Polarization` is a complex m x m matrix P acting on column vectors
of V_C with P^2 = P and both im P and ker P isotropic for q.  Tensors in
V ⊗ V are stored as matrices T^{mu nu}, so (A ⊗ B)T = A T B^T.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import expm, expm_frechet, logm, null_space, sqrtm

from .forms import Bivector, Metric, Rotation

__all__ = [
    "PolarizationError",
    "Polarization",
    "ComplexStructure",
    "TangentVector",
    "from_complex_structure",
    "polarization_from_frames",
    "polarization_from_pair",
    "kp_lambda",
    "retraction",
    "retraction_prime",
    "transversal",
    "validate_tangent",
    "tangent_space_basis",
    "kahler_form",
    "curvature_form",
    "is_q_antisymmetric",
    "ConjugationPath",
    "ConcatenatedPath",
    "direct_rotation",
    "path_through",
    "geodesic_path",
    "conjugate",
]

DEFAULT_TOL = 1e-10


class PolarizationError(ValueError):
    """A matrix failed the polarisation, complex-structure or tangent checks."""


def _rel(a: np.ndarray, scale: float) -> float:
    return float(np.max(np.abs(a))) / max(scale, 1.0) if a.size else 0.0


def _range_basis(a: np.ndarray, rank: int) -> np.ndarray:
    u, _, _ = np.linalg.svd(a)
    return u[:, :rank]


def _renormalise(frame: np.ndarray) -> np.ndarray:
    """QR orthonormalisation with a positive real diagonal (continuous in the input)."""
    qmat, r = np.linalg.qr(frame)
    d = np.diag(r)
    phase = np.where(np.abs(d) > 0, d / np.abs(d), 1.0)
    return qmat * phase[None, :]


@dataclass(frozen=True, eq=False)
class Polarization:
    """Projection P with isotropic image and kernel.

    ``frame_hint`` (an m x m matrix [E | E']) lets a path reuse the previous
    adapted frame: the new frames are its projections, re-normalised.
    """

    P: np.ndarray
    metric: Metric
    tol: float = DEFAULT_TOL
    frame_hint: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        P = np.asarray(self.P, dtype=complex)
        object.__setattr__(self, "P", P)
        m = self.metric.m
        if P.shape != (m, m):
            raise PolarizationError(f"P must be {m} x {m}")
        if m % 2:
            raise PolarizationError("polarisations need an even dimension")
        scale = float(np.linalg.norm(P)) + 1.0
        qs = self.metric.qsharp
        one = np.eye(m)
        checks = {
            "P^2 = P": P @ P - P,
            "(P⊗P)q = 0": P @ qs @ P.T,
            "((1-P)⊗(1-P))q = 0": (one - P) @ qs @ (one - P).T,
        }
        for name, res in checks.items():
            if _rel(res, scale ** 2) > self.tol:
                raise PolarizationError(f"{name} fails (residual {_rel(res, 1.0):.3e})")
        rank = int(round(np.trace(P).real))
        if rank != m // 2:
            raise PolarizationError(f"rank P = {rank}, expected {m // 2}")

    @property
    def m(self) -> int:
        return self.metric.m

    @property
    def n(self) -> int:
        return self.metric.m // 2

    @cached_property
    def frame(self) -> np.ndarray:
        """[E | E']: columns 0..n-1 span im P, columns n..m-1 span ker P."""
        n, one = self.n, np.eye(self.m)
        if self.frame_hint is not None:
            hint = np.asarray(self.frame_hint, dtype=complex)
            E = _renormalise(self.P @ hint[:, :n])
            Ep = _renormalise((one - self.P) @ hint[:, n:])
        else:
            E = _range_basis(self.P, n)
            Ep = _range_basis(one - self.P, n)
        B = np.hstack([E, Ep])
        if np.linalg.cond(B) > 1e10:
            raise PolarizationError("adapted frame is degenerate")
        return B

    @property
    def E(self) -> np.ndarray:
        return self.frame[:, : self.n]

    @property
    def E_prime(self) -> np.ndarray:
        return self.frame[:, self.n:]

    @cached_property
    def frame_inverse(self) -> np.ndarray:
        """Rows are the frame coordinates theta^a as combinations of theta^mu."""
        return np.linalg.inv(self.frame)

    @cached_property
    def q_mixed(self) -> np.ndarray:
        """q_{i'j} = q(e_{i'}, e_j) (n x n, row i' in ker P, column j in im P)."""
        return self.E_prime.T @ self.metric.numeric @ self.E

    @property
    def conjugate(self) -> np.ndarray:
        return self.P.conj()

    def with_hint(self, frame: np.ndarray) -> Polarization:
        return Polarization(self.P, self.metric, self.tol, frame)

    def to_json(self) -> dict:
        return {"P": [[[z.real, z.imag] for z in row] for row in self.P.tolist()],
                "metric": self.metric.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> Polarization:
        metric = Metric.from_json(obj["metric"])
        a = np.asarray(obj["P"], dtype=float)
        P = a[..., 0] + 1j * a[..., 1] if a.ndim == 3 else a
        return cls(P, metric)


def _orientation_sign(J: np.ndarray, q: np.ndarray) -> float:
    """Sign of the volume of (x1, Jx1, ..., xn, Jxn) for a q-orthonormal family."""
    m = J.shape[0]
    vecs: list[np.ndarray] = []
    for k in range(m):
        if len(vecs) == m:
            break
        x = np.eye(m)[:, k].astype(float)
        for v in vecs:
            x = x - (v @ q @ x) * v
        nrm = np.sqrt(x @ q @ x)
        if nrm < 1e-8:
            continue
        x = x / nrm
        jx = J @ x
        for v in vecs:
            jx = jx - (v @ q @ jx) * v
        jx = jx / np.sqrt(jx @ q @ jx)
        vecs += [x, jx]
    return float(np.sign(np.linalg.det(np.column_stack(vecs))))


@dataclass(frozen=True, eq=False)
class ComplexStructure:
    """Real orthogonal J with J^2 = -1 compatible with the orientation."""

    J: np.ndarray
    metric: Metric
    tol: float = 1e-12
    check_orientation: bool = True

    def __post_init__(self):
        J = np.asarray(self.J)
        if np.iscomplexobj(J):
            if np.max(np.abs(J.imag)) > self.tol:
                raise PolarizationError("J must be real")
            J = J.real
        J = J.astype(float)
        object.__setattr__(self, "J", J)
        m = self.metric.m
        if J.shape != (m, m):
            raise PolarizationError(f"J must be {m} x {m}")
        if not self.metric.definite:
            raise PolarizationError("complex structures need a real positive-definite metric")
        q = self.metric.numeric.real
        scale = max(1.0, float(np.linalg.norm(J)))
        if np.max(np.abs(J @ J + np.eye(m))) > self.tol * scale ** 2:
            raise PolarizationError("J^2 != -1")
        if np.max(np.abs(J.T @ q @ J - q)) > self.tol * scale ** 2:
            raise PolarizationError("J does not preserve q")
        if self.check_orientation and _orientation_sign(J, q) < 0:
            raise PolarizationError("J is not compatible with the orientation")

    @property
    def m(self) -> int:
        return self.metric.m

    def conjugated(self, gamma) -> ComplexStructure:
        g = gamma.gamma if isinstance(gamma, Rotation) else np.asarray(gamma)
        return ComplexStructure(g @ self.J @ np.linalg.inv(g), self.metric, max(self.tol, 1e-10))


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Validated variation dP at a polarisation together with derived tensors."""

    base: Polarization
    dP: np.ndarray
    dK: np.ndarray
    dP_upper: np.ndarray
    dP_lower: np.ndarray

    def __add__(self, other: TangentVector) -> TangentVector:
        return validate_tangent(self.base, self.dP + other.dP)

    def scale(self, c) -> TangentVector:
        return validate_tangent(self.base, self.dP * c)


def from_complex_structure(J: ComplexStructure, tol: float = DEFAULT_TOL) -> Polarization:
    """P_J = (1 - iJ)/2, the projection onto the +i eigenspace of J."""
    m = J.m
    return Polarization(0.5 * (np.eye(m) - 1j * J.J), J.metric, tol)


def polarization_from_frames(E: np.ndarray, E_prime: np.ndarray, metric: Metric,
                             tol: float = DEFAULT_TOL) -> Polarization:
    """The projection with image span(E) and kernel span(E')."""
    B = np.hstack([E, E_prime]).astype(complex)
    n = E.shape[1]
    D = np.diag([1.0] * n + [0.0] * E_prime.shape[1])
    P = B @ D @ np.linalg.inv(B)
    return Polarization(P, metric, tol, frame_hint=B)


def polarization_from_pair(J: ComplexStructure, J_prime: ComplexStructure,
                           tol: float = DEFAULT_TOL) -> Polarization:
    """Polarisation with image L_{J'} and kernel the conjugate of L_J."""
    if not transversal(J, J_prime):
        raise PolarizationError("J and J' are not transversal")
    n = J.m // 2
    E = _range_basis(from_complex_structure(J_prime).P, n)
    Ep = _range_basis(np.eye(J.m) - from_complex_structure(J).P, n)
    return polarization_from_frames(E, Ep, J.metric, tol)


def kp_lambda(P: Polarization, metric: Metric | None = None) -> tuple[Bivector, np.ndarray]:
    """K_P = ((1-P)⊗P - P⊗(1-P)) q^sharp and Lambda_P = q^sharp + K_P = 2((1-P)⊗P) q^sharp."""
    metric = metric or P.metric
    one = np.eye(P.m)
    qs = metric.qsharp
    A = (one - P.P) @ qs @ P.P.T
    K = A - P.P @ qs @ (one - P.P).T
    K = 0.5 * (K - K.T)
    return Bivector(K), 2 * A


def retraction(P: Polarization) -> ComplexStructure:
    """r(P) = i(P(P - P̄)^{-1}(1 - P̄) + P̄(P - P̄)^{-1}(1 - P))."""
    if not P.metric.definite:
        raise PolarizationError("the retraction needs a real positive-definite metric")
    one = np.eye(P.m)
    Pb = P.P.conj()
    diff = P.P - Pb
    if np.linalg.cond(diff) > 1e12:
        raise PolarizationError("P - conj(P) is singular")
    inv = np.linalg.inv(diff)
    J = 1j * (P.P @ inv @ (one - Pb) + Pb @ inv @ (one - P.P))
    if np.max(np.abs(J.imag)) > 1e-8 * max(1.0, np.max(np.abs(J))):
        raise PolarizationError("retraction produced a non-real J")
    return ComplexStructure(J.real, P.metric, tol=1e-9)


def retraction_prime(P: Polarization) -> ComplexStructure:
    """r'(P) = r(1 - P), the complex structure read off from ker P."""
    return retraction(Polarization(np.eye(P.m) - P.P, P.metric, P.tol))


def transversal(J: ComplexStructure, J_prime: ComplexStructure, tol: float = 1e-10) -> bool:
    """True when det(J + J') is nonzero (L_{J'} and conj(L_J) are transverse)."""
    return abs(np.linalg.det(J.J + J_prime.J)) > tol


def _tangent_residuals(P: np.ndarray, dP: np.ndarray, qs: np.ndarray) -> dict:
    one = np.eye(P.shape[0])
    Q = one - P
    return {
        "P dP = dP (1-P)": P @ dP - dP @ Q,
        "(1-P) dP = dP P": Q @ dP - dP @ P,
        "(dP⊗P + P⊗dP)q = 0": dP @ qs @ P.T + P @ qs @ dP.T,
        "(dP⊗(1-P) + (1-P)⊗dP)q = 0": dP @ qs @ Q.T + Q @ qs @ dP.T,
    }


def validate_tangent(P: Polarization, dP, tol: float | None = None) -> TangentVector:
    """Check the linearised projection constraints and compute dK_P = -2(dP⊗1)q^sharp.

    ``dP_upper`` holds (dP)^{ij} and ``dP_lower`` holds (dP)^{i'j'} in the
    adapted frame.
    """
    tol = P.tol if tol is None else tol
    dP = np.asarray(dP, dtype=complex)
    if dP.shape != P.P.shape:
        raise PolarizationError("dP has the wrong shape")
    qs = P.metric.qsharp
    scale = 1.0 + float(np.linalg.norm(dP)) * (1.0 + float(np.linalg.norm(P.P))) ** 2
    for name, res in _tangent_residuals(P.P, dP, qs).items():
        if float(np.max(np.abs(res))) > tol * scale:
            raise PolarizationError(f"tangent constraint {name} fails")
    D = dP @ qs
    if float(np.max(np.abs(D + D.T))) > tol * scale:
        raise PolarizationError("(dP⊗1)q^sharp is not antisymmetric")
    Binv = P.frame_inverse
    comp = Binv @ D @ Binv.T
    n = P.n
    return TangentVector(P, dP, -2 * D, comp[:n, :n], comp[n:, n:])


def tangent_space_basis(P: Polarization) -> np.ndarray:
    """Null space of the linearised constraints, as an array of m x m matrices."""
    m = P.m
    rows = []
    for k in range(m * m):
        E = np.zeros(m * m, dtype=complex)
        E[k] = 1
        res = _tangent_residuals(P.P, E.reshape(m, m), P.metric.qsharp)
        rows.append(np.concatenate([r.reshape(-1) for r in res.values()]))
    A = np.array(rows).T
    ns = null_space(A, rcond=1e-10)
    return np.array([ns[:, k].reshape(m, m) for k in range(ns.shape[1])])


def kahler_form(J: ComplexStructure, dJ1: np.ndarray, dJ2: np.ndarray, tol: float = 1e-9) -> complex:
    """-(i/4)[tr(P_J dJ1 dJ2 P_J) - tr(P_J dJ2 dJ1 P_J)] for tangent vectors to the J-space."""
    q = J.metric.numeric.real
    for dJ in (dJ1, dJ2):
        dJ = np.asarray(dJ)
        scale = 1.0 + float(np.linalg.norm(dJ))
        if np.max(np.abs(dJ @ J.J + J.J @ dJ)) > tol * scale:
            raise PolarizationError("dJ must anticommute with J")
        low = q @ dJ
        if np.max(np.abs(low + low.T)) > tol * scale:
            raise PolarizationError("dJ must be q-antisymmetric")
    P = 0.5 * (np.eye(J.m) - 1j * J.J)
    return complex(-0.25j * (np.trace(P @ dJ1 @ dJ2 @ P) - np.trace(P @ dJ2 @ dJ1 @ P)))


def curvature_form(P: np.ndarray, dP1: np.ndarray, dP2: np.ndarray) -> complex:
    """-(1/2) tr(P (dP1 dP2 - dP2 dP1) P), the scalar curvature of the state bundle."""
    return complex(-0.5 * np.trace(P @ (dP1 @ dP2 - dP2 @ dP1) @ P))


def is_q_antisymmetric(X: np.ndarray, metric: Metric, tol: float = 1e-10) -> bool:
    low = metric.numeric @ X
    return float(np.max(np.abs(low + low.T))) <= tol * (1.0 + float(np.linalg.norm(X)))


def conjugate(P: Polarization, g: np.ndarray) -> Polarization:
    """g P g^{-1} for g preserving q (real or complex)."""
    g = g.gamma if isinstance(g, Rotation) else np.asarray(g)
    Pn = g @ P.P @ np.linalg.inv(g)
    return Polarization(Pn, P.metric, P.tol, frame_hint=g @ P.frame)


class ConjugationPath:
    """Path t -> exp(Y(t)) P0 exp(-Y(t)) with Y piecewise linear through ``nodes``.

    Each generator must be q-antisymmetric (real for paths inside the space
    of complex structures, complex otherwise).  The parameter t runs over
    [0, len(nodes) - 1]; segment k joins nodes[k] and nodes[k + 1].
    """

    def __init__(self, base: Polarization, nodes):
        self.base = base
        self.nodes = [np.asarray(Y, dtype=complex) for Y in nodes]
        if len(self.nodes) < 2:
            raise ValueError("a path needs at least two nodes")
        for Y in self.nodes:
            if not is_q_antisymmetric(Y, base.metric):
                raise PolarizationError("path generators must be q-antisymmetric")

    @property
    def segments(self) -> int:
        return len(self.nodes) - 1

    @property
    def metric(self) -> Metric:
        return self.base.metric

    def _locate(self, t: float):
        k = min(int(np.floor(t)), self.segments - 1)
        k = max(k, 0)
        s = t - k
        Y0, Y1 = self.nodes[k], self.nodes[k + 1]
        return Y0 + s * (Y1 - Y0), Y1 - Y0

    def group(self, t: float) -> np.ndarray:
        Y, _ = self._locate(t)
        return expm(Y)

    def P(self, t: float) -> np.ndarray:
        g = self.group(t)
        return g @ self.base.P @ np.linalg.inv(g)

    def segment_P_and_dot(self, k: int, s: float) -> tuple[np.ndarray, np.ndarray]:
        """P and dP/dt on the closed segment k at local parameter s in [0, 1]."""
        Y0, Y1 = self.nodes[k], self.nodes[k + 1]
        return self._P_and_dot(Y0 + s * (Y1 - Y0), Y1 - Y0)

    def P_and_dot(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        return self._P_and_dot(*self._locate(t))

    def _P_and_dot(self, Y, dY):
        g, dg = expm_frechet(Y, dY)
        ginv = np.linalg.inv(g)
        Pt = g @ self.base.P @ ginv
        W = dg @ ginv
        return Pt, W @ Pt - Pt @ W

    def polarization(self, t: float) -> Polarization:
        g = self.group(t)
        return Polarization(g @ self.base.P @ np.linalg.inv(g), self.base.metric, self.base.tol,
                            frame_hint=g @ self.base.frame)

    def samples(self, steps: int) -> list[Polarization]:
        ts = np.linspace(0.0, self.segments, steps + 1)
        return [self.polarization(t) for t in ts]

    @property
    def start(self) -> Polarization:
        return self.polarization(0.0)

    @property
    def end(self) -> Polarization:
        return self.polarization(float(self.segments))

    def reversed(self) -> ConjugationPath:
        return _ReversedPath(self)

    def then(self, other: ConjugationPath) -> ConcatenatedPath:
        return ConcatenatedPath([self, other])


class _ReversedPath(ConjugationPath):
    def __init__(self, path: ConjugationPath):
        self._path = path
        self.base = path.end
        self.nodes = path.nodes[::-1]

    def _t(self, t):
        return self._path.segments - t

    def group(self, t):
        return self._path.group(self._t(t))

    def P(self, t):
        return self._path.P(self._t(t))

    def P_and_dot(self, t):
        Pt, dP = self._path.P_and_dot(self._t(t))
        return Pt, -dP

    def segment_P_and_dot(self, k, s):
        Pt, dP = self._path.segment_P_and_dot(self._path.segments - 1 - k, 1.0 - s)
        return Pt, -dP

    def polarization(self, t):
        return self._path.polarization(self._t(t))


class ConcatenatedPath:
    """Several paths traversed one after another."""

    def __init__(self, parts):
        self.parts = list(parts)

    @property
    def segments(self) -> int:
        return sum(p.segments for p in self.parts)

    @property
    def metric(self) -> Metric:
        return self.parts[0].metric

    def _locate(self, t):
        for p in self.parts:
            if t <= p.segments or p is self.parts[-1]:
                return p, min(t, p.segments)
            t -= p.segments
        raise AssertionError

    def P(self, t):
        p, s = self._locate(t)
        return p.P(s)

    def P_and_dot(self, t):
        p, s = self._locate(t)
        return p.P_and_dot(s)

    def segment_P_and_dot(self, k, s):
        for p in self.parts:
            if k < p.segments:
                return p.segment_P_and_dot(k, s)
            k -= p.segments
        raise IndexError("segment index out of range")

    def polarization(self, t):
        p, s = self._locate(t)
        return p.polarization(s)

    @property
    def start(self):
        return self.parts[0].start

    @property
    def end(self):
        return self.parts[-1].end

    def samples(self, steps: int):
        ts = np.linspace(0.0, self.segments, steps + 1)
        return [self.polarization(t) for t in ts]

    def then(self, other):
        return ConcatenatedPath(self.parts + [other])


def geodesic_path(J0: ComplexStructure, X: np.ndarray, steps: int | None = None):
    """Path J_t = e^{tX} J0 e^{-tX}, t in [0, 1], for real antisymmetric X.

    Returns the :class:`ConjugationPath`; with ``steps`` the list of sampled
    polarisations P_{J_t} is returned instead.
    """
    X = np.asarray(X)
    if np.iscomplexobj(X) and np.max(np.abs(X.imag)) > 0:
        raise PolarizationError("geodesic generators must be real")
    X = np.real(X)
    if not is_q_antisymmetric(X, J0.metric):
        raise PolarizationError("geodesic generators must be q-antisymmetric")
    path = ConjugationPath(from_complex_structure(J0), [np.zeros_like(X), X])
    return path if steps is None else path.samples(steps)


def direct_rotation(P0: Polarization, P1: Polarization) -> np.ndarray:
    """The complex q-orthogonal g closest to 1 with g P0 g^{-1} = P1.

    U = P1 P0 + (1 - P1)(1 - P0) intertwines the two projections; the q-adjoint
    of a polarisation is 1 - P, so U*U commutes with P0 and U (U*U)^{-1/2} is
    q-orthogonal.  Needs ||P1 - P0|| < 1.
    """
    A, B = P0.P, P1.P
    one = np.eye(P0.m)
    U = B @ A + (one - B) @ (one - A)
    q = P0.metric.numeric
    Ustar = np.linalg.solve(q, U.T @ q)
    S = Ustar @ U
    if np.linalg.cond(S) > 1e8:
        raise PolarizationError("polarisations too far apart for a direct rotation")
    return U @ np.linalg.inv(sqrtm(S))


def path_through(polarizations) -> ConcatenatedPath:
    """Path visiting the given polarisations, each step a direct rotation."""
    pols = list(polarizations)
    if len(pols) < 2:
        raise ValueError("a path needs at least two polarisations")
    parts = []
    for P0, P1 in zip(pols[:-1], pols[1:]):
        X = logm(direct_rotation(P0, P1))
        if P0.metric.is_identity() and np.max(np.abs(X.imag)) < 1e-13:
            X = X.real
        X = 0.5 * (X - np.linalg.solve(P0.metric.numeric, X.T @ P0.metric.numeric))
        parts.append(ConjugationPath(P0, [np.zeros_like(X), X]))
    return ConcatenatedPath(parts)
