"""Exact scalars: Gaussian rationals and Laurent polynomials in hbar.

Formal-mode multivectors store :class:`GaussianRational` entries in numpy
object arrays, so arithmetic on them never rounds.  Zeros are kept as plain
``int`` 0, which keeps the object-array loops cheap.
"""

from __future__ import annotations

import numbers
from fractions import Fraction

import numpy as np
from gmpy2 import mpq

__all__ = [
    "GaussianRational",
    "Laurent",
    "exact",
    "exact_array",
    "exact_inverse",
    "to_complex",
    "is_exact_zero",
]


def _mpq(x) -> mpq:
    if isinstance(x, mpq):
        return x
    if isinstance(x, float):
        # every finite double is a dyadic rational; Fraction converts it exactly
        return mpq(Fraction(x))
    if isinstance(x, str):
        return mpq(Fraction(x))
    return mpq(x)


class GaussianRational:
    """Element of Q(i) with gmpy2 rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _mpq(re)
        self.im = _mpq(im)

    @classmethod
    def _make(cls, re, im) -> GaussianRational:
        r = object.__new__(cls)
        r.re = re
        r.im = im
        return r

    def __add__(self, o):
        if type(o) is GaussianRational:
            return GaussianRational._make(self.re + o.re, self.im + o.im)
        if type(o) is int:
            return self if o == 0 else GaussianRational._make(self.re + o, self.im)
        if isinstance(o, numbers.Rational):
            return GaussianRational._make(self.re + o, self.im)
        if type(o) is type(self.re):
            return GaussianRational._make(self.re + o, self.im)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational._make(-self.re, -self.im)

    def __sub__(self, o):
        if type(o) is GaussianRational:
            return GaussianRational._make(self.re - o.re, self.im - o.im)
        if isinstance(o, numbers.Rational) or type(o) is type(self.re):
            return GaussianRational._make(self.re - o, self.im)
        return NotImplemented

    def __rsub__(self, o):
        if isinstance(o, numbers.Rational) or type(o) is type(self.re):
            return GaussianRational._make(o - self.re, -self.im)
        return NotImplemented

    def __mul__(self, o):
        if type(o) is GaussianRational:
            a, b, c, d = self.re, self.im, o.re, o.im
            return GaussianRational._make(a * c - b * d, a * d + b * c)
        if type(o) is int:
            if o == 0:
                return 0
            return GaussianRational._make(self.re * o, self.im * o)
        if isinstance(o, numbers.Rational) or type(o) is type(self.re):
            return GaussianRational._make(self.re * o, self.im * o)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, o):
        if not isinstance(o, GaussianRational):
            if isinstance(o, numbers.Rational) or type(o) is type(self.re):
                o = GaussianRational(o)
            else:
                return NotImplemented
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by exact zero")
        a, b, c, d = self.re, self.im, o.re, o.im
        return GaussianRational._make((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, o):
        return GaussianRational(o) / self

    def __eq__(self, o):
        if type(o) is GaussianRational:
            return self.re == o.re and self.im == o.im
        if isinstance(o, numbers.Rational) or type(o) is type(self.re):
            return self.im == 0 and self.re == o
        if isinstance(o, numbers.Complex):
            return complex(self) == o
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(Fraction(int(self.re.numerator), int(self.re.denominator)))
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))

    def conjugate(self) -> GaussianRational:
        return GaussianRational._make(self.re, -self.im)

    def __repr__(self):
        if self.im == 0:
            return f"GaussianRational({self.re})"
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


def exact(x) -> GaussianRational | int:
    """Convert a number to an exact scalar (floats are converted bit-exactly)."""
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, (bool, np.bool_)):
        x = int(x)
    if isinstance(x, (int, np.integer)):
        x = int(x)
        return 0 if x == 0 else GaussianRational(x)
    if isinstance(x, (complex, np.complexfloating)):
        x = complex(x)
        if x == 0:
            return 0
        return GaussianRational(x.real, x.imag)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return 0 if x == 0 else GaussianRational(x)
    if isinstance(x, Laurent):
        raise TypeError("cannot convert a Laurent polynomial to a constant scalar")
    q = GaussianRational(x)
    return q if q else 0


def exact_array(a) -> np.ndarray:
    """Object array of exact scalars with the shape of ``a``."""
    a = np.asarray(a)
    out = np.empty(a.shape, dtype=object)
    flat = out.reshape(-1)
    for k, v in enumerate(a.reshape(-1)):
        flat[k] = exact(v)
    return out


def exact_inverse(a: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse of a square object array over Q(i)."""
    a = exact_array(a)
    n = a.shape[0]
    work = np.empty((n, 2 * n), dtype=object)
    work[:, :n] = a
    work[:, n:] = exact_array(np.eye(n, dtype=int))
    for col in range(n):
        pivot = next((r for r in range(col, n) if work[r, col] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("matrix is singular")
        if pivot != col:
            work[[col, pivot]] = work[[pivot, col]]
        inv = GaussianRational(1) / exact(work[col, col])
        work[col] = np.array([v * inv for v in work[col]], dtype=object)
        for r in range(n):
            if r != col and work[r, col] != 0:
                factor = work[r, col]
                work[r] = np.array(
                    [exact(x - factor * y) if (x != 0 or y != 0) else 0
                     for x, y in zip(work[r], work[col])],
                    dtype=object,
                )
    return np.vectorize(lambda v: exact(v) if v != 0 else 0, otypes=[object])(work[:, n:])


def to_complex(x) -> complex:
    if isinstance(x, Laurent):
        raise TypeError("evaluate the Laurent polynomial at a numeric hbar first")
    return complex(x)


def is_exact_zero(x) -> bool:
    return not x


class Laurent:
    """Laurent polynomial in hbar with exact Gaussian-rational coefficients.

    ``coeffs[k]`` multiplies ``hbar**(lo + k)``.
    """

    __slots__ = ("lo", "coeffs")

    def __init__(self, coeffs=None, lo: int = 0):
        if isinstance(coeffs, dict):
            if coeffs:
                lo = min(int(k) for k in coeffs)
                hi = max(int(k) for k in coeffs)
                lst = [0] * (hi - lo + 1)
                for k, v in coeffs.items():
                    lst[int(k) - lo] = exact(v)
            else:
                lst = []
        else:
            lst = [exact(v) for v in (coeffs or [])]
        self.lo, self.coeffs = _trim(lo, lst)

    @classmethod
    def constant(cls, c) -> Laurent:
        return cls([c])

    @classmethod
    def hbar(cls, power: int = 1) -> Laurent:
        return cls([1], lo=power)

    def items(self):
        for k, c in enumerate(self.coeffs):
            if c != 0:
                yield self.lo + k, c

    def coefficient(self, power: int):
        k = power - self.lo
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return 0

    @property
    def degree(self) -> int | None:
        """Highest hbar power with a nonzero coefficient (None for zero)."""
        if not self.coeffs:
            return None
        return self.lo + len(self.coeffs) - 1

    @property
    def low_degree(self) -> int | None:
        return self.lo if self.coeffs else None

    def evaluate(self, hbar: float) -> complex:
        return sum((complex(c) * hbar ** p for p, c in self.items()), 0j)

    def __call__(self, hbar: float) -> complex:
        return self.evaluate(hbar)

    def _coerce(self, o) -> Laurent:
        return o if isinstance(o, Laurent) else Laurent([o])

    def __add__(self, o):
        o = self._coerce(o)
        if not o.coeffs:
            return self
        if not self.coeffs:
            return o
        lo = min(self.lo, o.lo)
        hi = max(self.lo + len(self.coeffs), o.lo + len(o.coeffs))
        out = [0] * (hi - lo)
        for p, c in self.items():
            out[p - lo] = out[p - lo] + c
        for p, c in o.items():
            out[p - lo] = out[p - lo] + c
        return Laurent(out, lo)

    __radd__ = __add__

    def __neg__(self):
        return Laurent([-c if c != 0 else 0 for c in self.coeffs], self.lo)

    def __sub__(self, o):
        return self + (-self._coerce(o))

    def __rsub__(self, o):
        return self._coerce(o) - self

    def __mul__(self, o):
        o = self._coerce(o)
        if not self.coeffs or not o.coeffs:
            return Laurent()
        out = [0] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(o.coeffs):
                if b != 0:
                    out[i + j] = out[i + j] + a * b
        return Laurent(out, self.lo + o.lo)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            if len([1 for _ in self.items()]) != 1:
                raise ValueError("only monomials can be inverted")
            (p, c), = self.items()
            return Laurent([_pow_exact(GaussianRational(1) / exact(c), -n)], p * n)
        out = Laurent([1])
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, o):
        if isinstance(o, Laurent):
            return self.lo == o.lo and self.coeffs == o.coeffs if self.coeffs else not o.coeffs
        if isinstance(o, numbers.Number) or isinstance(o, GaussianRational):
            return self == Laurent([o])
        return NotImplemented

    def __hash__(self):
        return hash((self.lo, tuple(self.coeffs)))

    def __bool__(self):
        return bool(self.coeffs)

    def __repr__(self):
        if not self.coeffs:
            return "Laurent(0)"
        parts = [f"({c})*hbar^{p}" if p else f"({c})" for p, c in self.items()]
        return "Laurent(" + " + ".join(parts) + ")"


def _pow_exact(c, n):
    out = GaussianRational(1)
    for _ in range(n):
        out = out * c
    return out


def _trim(lo: int, lst: list):
    start = 0
    while start < len(lst) and lst[start] == 0:
        start += 1
    end = len(lst)
    while end > start and lst[end - 1] == 0:
        end -= 1
    return (lo + start if end > start else 0), [exact(v) if v != 0 else 0 for v in lst[start:end]]
