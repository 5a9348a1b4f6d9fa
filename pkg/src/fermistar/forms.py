"""Metric, bivector and rotation data for the fermionic phase space."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .scalars import exact_array, exact_inverse

__all__ = ["Metric", "Bivector", "Rotation", "transform_bivector", "random_rotation"]

MATRIX_TOL = 1e-12


def _is_exact_matrix(a: np.ndarray) -> bool:
    return a.dtype == object


def _numeric(a: np.ndarray) -> np.ndarray:
    if _is_exact_matrix(a):
        return np.array([[complex(x) for x in row] for row in a], dtype=np.complex128)
    return np.asarray(a, dtype=np.complex128)


def _square(a, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class Metric:
    """Symmetric form q_{mu nu} with inverse q^{mu nu}.

    By default q must be real and positive definite.  ``definite=False``
    admits any nondegenerate complex symmetric matrix, which is what the
    metric looks like in a complex frame such as (theta^1, theta^2,
    conj theta^1, conj theta^2).
    """

    q: np.ndarray
    definite: bool = True

    def __post_init__(self):
        q = _square(self.q, "q")
        object.__setattr__(self, "q", q)
        if _is_exact_matrix(q):
            if any(q[i, j] != q[j, i] for i in range(len(q)) for j in range(i)):
                raise ValueError("metric must be exactly symmetric")
        elif not np.array_equal(q, q.T):
            raise ValueError("metric must be exactly symmetric")
        qn = self.numeric
        if self.definite:
            if np.max(np.abs(qn.imag)) > 0:
                raise ValueError("a definite metric must be real")
            if np.min(np.linalg.eigvalsh(qn.real)) <= 0:
                raise ValueError("metric is not positive definite")
        if abs(np.linalg.det(qn)) < MATRIX_TOL:
            raise ValueError("metric is degenerate")
        resid = np.max(np.abs(qn @ self.qsharp - np.eye(self.m)))
        if resid > 1e-12 * max(1.0, np.linalg.cond(qn)):
            raise ValueError("metric inverse is inaccurate")

    @classmethod
    def identity(cls, m: int) -> Metric:
        return cls(np.eye(m))

    @property
    def m(self) -> int:
        return self.q.shape[0]

    @cached_property
    def numeric(self) -> np.ndarray:
        return _numeric(self.q)

    @cached_property
    def qsharp(self) -> np.ndarray:
        """Inverse matrix q^{mu nu} in double precision."""
        return np.linalg.inv(self.numeric)

    @cached_property
    def q_exact(self) -> np.ndarray:
        return exact_array(self.q)

    @cached_property
    def qsharp_exact(self) -> np.ndarray:
        """Inverse computed over Q(i); floats enter as their exact dyadic values."""
        return exact_inverse(self.q_exact)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.numeric, np.eye(self.m)))

    def to_json(self) -> dict:
        qn = self.numeric
        return {"m": self.m, "q": qn.real.tolist()} if not np.any(qn.imag) else \
            {"m": self.m, "q": [[[z.real, z.imag] for z in row] for row in qn]}

    @classmethod
    def from_json(cls, obj: dict) -> Metric:
        q = _matrix_from_json(obj["q"], int(obj["m"]))
        definite = bool(obj.get("definite", not np.iscomplexobj(q)))
        return cls(q, definite=definite)


@dataclass(frozen=True, eq=False)
class Bivector:
    """Antisymmetric complex contravariant 2-tensor K^{mu nu}."""

    K: np.ndarray

    def __post_init__(self):
        K = _square(self.K, "K")
        object.__setattr__(self, "K", K)
        if _is_exact_matrix(K):
            bad = any(K[i, j] + K[j, i] != 0 for i in range(len(K)) for j in range(i + 1))
        else:
            bad = not np.array_equal(K, -K.T)
        if bad:
            raise ValueError("bivector must be exactly antisymmetric")

    @classmethod
    def zero(cls, m: int) -> Bivector:
        return cls(np.zeros((m, m)))

    @classmethod
    def from_upper(cls, m: int, entries: dict) -> Bivector:
        """Build from ``{(mu, nu): value}`` with 1-based mu < nu."""
        K = np.empty((m, m), dtype=object)
        K.fill(0)
        for (mu, nu), v in entries.items():
            K[mu - 1, nu - 1] = v
            K[nu - 1, mu - 1] = -v
        if all(isinstance(x, (int, float, complex)) for x in K.flat):
            K = np.array(K.tolist(), dtype=np.complex128)
        return cls(K)

    @property
    def m(self) -> int:
        return self.K.shape[0]

    @cached_property
    def numeric(self) -> np.ndarray:
        return _numeric(self.K)

    @cached_property
    def exact(self) -> np.ndarray:
        return exact_array(self.K)

    def __add__(self, other: Bivector) -> Bivector:
        if _is_exact_matrix(self.K) or _is_exact_matrix(other.K):
            return Bivector(self.exact + other.exact)
        return Bivector(self.K + other.K)

    def __sub__(self, other: Bivector) -> Bivector:
        if _is_exact_matrix(self.K) or _is_exact_matrix(other.K):
            return Bivector(self.exact - other.exact)
        return Bivector(self.K - other.K)

    def __neg__(self) -> Bivector:
        return Bivector(-self.exact if _is_exact_matrix(self.K) else -self.K)

    def lam(self, metric: Metric, formal: bool = False) -> np.ndarray:
        """Lambda^{mu nu} = q^{mu nu} + K^{mu nu}."""
        if formal:
            return metric.qsharp_exact + self.exact
        return metric.qsharp + self.numeric

    def to_json(self) -> dict:
        Kn = self.numeric
        return {"m": self.m, "K": [[[z.real, z.imag] for z in row] for row in Kn]}

    @classmethod
    def from_json(cls, obj: dict) -> Bivector:
        return cls(_matrix_from_json(obj["K"], int(obj["m"])))


@dataclass(frozen=True, eq=False)
class Rotation:
    """Element of SO(V, q): gamma^T q gamma = q and det gamma = 1."""

    gamma: np.ndarray
    metric: Metric | None = field(default=None)

    def __post_init__(self):
        g = np.asarray(_square(self.gamma, "gamma"), dtype=float)
        object.__setattr__(self, "gamma", g)
        q = np.eye(len(g)) if self.metric is None else self.metric.numeric.real
        if self.metric is not None and self.metric.m != len(g):
            raise ValueError("rotation and metric sizes differ")
        if np.max(np.abs(g.T @ q @ g - q)) > MATRIX_TOL * max(1.0, np.max(np.abs(q))):
            raise ValueError("matrix does not preserve the metric")
        if abs(np.linalg.det(g) - 1.0) > MATRIX_TOL:
            raise ValueError("rotation must have determinant +1")

    @property
    def m(self) -> int:
        return self.gamma.shape[0]

    @cached_property
    def inverse_matrix(self) -> np.ndarray:
        return np.linalg.inv(self.gamma)

    @cached_property
    def inverse_exact(self) -> np.ndarray:
        return exact_inverse(exact_array(self.gamma))

    def __matmul__(self, other: Rotation) -> Rotation:
        return Rotation(self.gamma @ other.gamma, self.metric)

    def inverse(self) -> Rotation:
        return Rotation(self.inverse_matrix, self.metric)

    @classmethod
    def identity(cls, m: int) -> Rotation:
        return cls(np.eye(m))


def transform_bivector(gamma: Rotation, K: Bivector) -> Bivector:
    """(gamma ⊗ gamma) K = gamma K gamma^T."""
    g = gamma.gamma
    Kn = K.numeric
    out = g @ Kn @ g.T
    return Bivector(0.5 * (out - out.T))


def random_rotation(m: int, rng: np.random.Generator) -> Rotation:
    """Haar-distributed rotation of R^m with determinant +1."""
    from scipy.stats import special_ortho_group

    return Rotation(special_ortho_group.rvs(m, random_state=rng))


def _has_string(x) -> bool:
    return isinstance(x, str) or (isinstance(x, list) and any(_has_string(y) for y in x))


def _matrix_from_json(rows, m: int) -> np.ndarray:
    """Real m x m or complex m x m x 2 matrix; entries like "1/3" give an exact matrix."""
    if _has_string(rows):
        from fractions import Fraction

        from .scalars import GaussianRational

        a = np.array(rows, dtype=object)
        if a.shape not in ((m, m), (m, m, 2)):
            raise ValueError(f"matrix must be {m}x{m} real or {m}x{m}x2 complex, got shape {a.shape}")
        out = np.empty((m, m), dtype=object)
        for i in range(m):
            for j in range(m):
                if a.ndim == 2:
                    out[i, j] = GaussianRational(Fraction(a[i, j]))
                else:
                    out[i, j] = GaussianRational(Fraction(a[i, j, 0]), Fraction(a[i, j, 1]))
        return out
    a = np.array(rows, dtype=float)
    if a.shape == (m, m):
        return a
    if a.shape == (m, m, 2):
        return a[..., 0] + 1j * a[..., 1]
    raise ValueError(f"matrix must be {m}x{m} real or {m}x{m}x2 complex, got shape {a.shape}")
