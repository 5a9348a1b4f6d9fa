"""Grassmann-algebra engine on bitmask-encoded monomials.

A :class:`Multivector` on ``m`` generators stores all ``2**m`` coefficients.
Generator ``mu`` (1-based) is bit ``mu - 1`` and a mask denotes the monomial
with increasing indices, so theta^1 theta^2 ... theta^m is the top mask and
its coefficient is the Berezin integral.

Two scalar modes are supported.

* numeric: one layer of complex128 coefficients at a fixed positive ``hbar``.
* formal: a stack of object-array layers of exact Gaussian rationals; layer
  ``p`` multiplies ``hbar**(lo + p)``, so coefficients are Laurent polynomials
  in a symbolic hbar and every identity can be checked with zero tolerance.

Doubled algebras (graded tensor products) are multivectors on ``2m``
generators whose first ``m`` generators are the first slot.
"""

from __future__ import annotations

import math
import numbers

import numpy as np

from . import _bits
from ._bits import indices_from_mask, mask_from_indices
from .scalars import GaussianRational, Laurent, exact

__all__ = [
    "Multivector",
    "DoubledMultivector",
    "DimensionError",
    "ModeError",
    "ParityError",
    "wedge",
    "fermi_derivative",
    "signed_derivative",
    "berezin_integral",
    "exp_even",
    "tensor_embed",
    "diagonal_pullback",
    "graded_flip",
    "triple_embed",
    "tri_diagonal_pullback",
    "slot_derivative",
    "linear_substitution",
]

NUMERIC_PRUNE = 1e-14


class DimensionError(ValueError):
    """Operands live on different numbers of generators."""


class ModeError(ValueError):
    """Operands mix numeric and formal scalars (or different hbar values)."""


class ParityError(ValueError):
    """An operation that needs an even element received odd terms."""


_nonzero = np.frompyfunc(bool, 1, 1)
_neg_obj = np.frompyfunc(lambda x: -x if x else 0, 1, 1)


def _nonzero_mask(data: np.ndarray) -> np.ndarray:
    if data.dtype == object:
        return _nonzero(data).astype(bool)
    return data != 0


def _normalize(data: np.ndarray, lo: int, formal: bool):
    if not formal:
        data = np.asarray(data, dtype=np.complex128)
        if data.size:
            peak = np.max(np.abs(data))
            if peak > 0:
                data = np.where(np.abs(data) < NUMERIC_PRUNE * peak, 0, data)
        return data, 0
    nz = _nonzero_mask(data)
    if not nz.all():
        data = data.copy()
        data[~nz] = 0
    rows = np.flatnonzero(nz.any(axis=1))
    if rows.size == 0:
        return np.zeros((1, data.shape[1]), dtype=object), 0
    first, last = rows[0], rows[-1]
    if first == 0 and last == data.shape[0] - 1:
        return data, lo
    return data[first:last + 1], lo + int(first)


def _zeros(layers: int, n: int, formal: bool) -> np.ndarray:
    if formal:
        out = np.empty((layers, n), dtype=object)
        out.fill(0)
        return out
    return np.zeros((layers, n), dtype=np.complex128)


def _negate_columns(vals: np.ndarray, neg: np.ndarray) -> np.ndarray:
    """Flip the sign of the columns flagged in ``neg`` (a fresh array)."""
    if vals.dtype == object:
        vals = vals.copy()
        if neg.any():
            vals[:, neg] = _neg_obj(vals[:, neg])
        return vals
    return vals * np.where(neg, -1.0, 1.0)


class Multivector:
    """Element of the complexified exterior algebra on ``m`` generators."""

    __slots__ = ("m", "data", "lo", "hbar")
    algebra = "grassmann"

    def __init__(self, m: int, data, lo: int = 0, hbar: float | None = 1.0):
        if not 0 <= m <= _bits.MAX_GENERATORS * 2:
            raise DimensionError(f"unsupported generator count {m}")
        data = np.asarray(data)
        if data.ndim == 1:
            data = data[None, :]
        if data.shape[1] != 1 << m:
            raise DimensionError(f"expected {1 << m} coefficients, got {data.shape[1]}")
        formal = data.dtype == object
        if not formal:
            if data.shape[0] != 1:
                raise ModeError("numeric multivectors carry a single layer")
            if hbar is None or not hbar > 0:
                raise ModeError("numeric mode needs a positive hbar")
            hbar = float(hbar)
        else:
            hbar = None
        data, lo = _normalize(data, int(lo), formal)
        data.setflags(write=False)
        object.__setattr__(self, "m", int(m))
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hbar", hbar)

    def __setattr__(self, name, value):
        raise AttributeError("multivectors are immutable")

    # ------------------------------------------------------------------ build
    @classmethod
    def zero(cls, m: int, *, formal: bool = False, hbar: float = 1.0):
        return cls(m, _zeros(1, 1 << m, formal), 0, None if formal else hbar)

    @classmethod
    def from_masks(cls, m: int, terms: dict, *, formal: bool = False, hbar: float = 1.0):
        """Build from ``{mask: scalar}``; scalars may be Laurent in formal mode."""
        n = 1 << m
        if not formal:
            data = np.zeros((1, n), dtype=np.complex128)
            for mask, c in terms.items():
                data[0, int(mask)] += _numeric_scalar(c, hbar)
            return cls(m, data, 0, hbar)
        layered = {}
        for mask, c in terms.items():
            lo, coeffs = _formal_scalar(c)
            for k, v in enumerate(coeffs):
                if v != 0:
                    key = (lo + k, int(mask))
                    layered[key] = layered.get(key, 0) + v
        if not layered:
            return cls.zero(m, formal=True)
        lo = min(p for p, _ in layered)
        hi = max(p for p, _ in layered)
        data = _zeros(hi - lo + 1, n, True)
        for (p, mask), v in layered.items():
            data[p - lo, mask] = v
        return cls(m, data, lo, None)

    @classmethod
    def from_terms(cls, m: int, terms: dict, *, formal: bool = False, hbar: float = 1.0):
        """Build from ``{(mu1, mu2, ...): scalar}`` with 1-based generator indices.

        Index tuples need not be sorted; they are reordered with the
        corresponding sign, and tuples with a repeated index vanish.
        """
        masks = {}
        for idx, c in terms.items():
            sign, mask = _sort_sign(tuple(idx), m)
            if sign == 0:
                continue
            masks[mask] = masks.get(mask, 0) + (c if sign > 0 else -c)
        return cls.from_masks(m, masks, formal=formal, hbar=hbar)

    @classmethod
    def scalar(cls, c, m: int, *, formal: bool = False, hbar: float = 1.0):
        return cls.from_masks(m, {0: c}, formal=formal, hbar=hbar)

    @classmethod
    def generator(cls, mu: int, m: int, *, formal: bool = False, hbar: float = 1.0):
        _check_index(mu, m)
        return cls.from_masks(m, {1 << (mu - 1): 1}, formal=formal, hbar=hbar)

    @classmethod
    def monomial(cls, indices, m: int, coeff=1, *, formal: bool = False, hbar: float = 1.0):
        return cls.from_terms(m, {tuple(indices): coeff}, formal=formal, hbar=hbar)

    @classmethod
    def linear(cls, vector, m: int | None = None, *, formal: bool = False, hbar: float = 1.0):
        """Degree-one element sum_mu vector[mu-1] theta^mu."""
        vector = list(vector)
        m = len(vector) if m is None else m
        return cls.from_masks(m, {1 << i: c for i, c in enumerate(vector)}, formal=formal, hbar=hbar)

    @classmethod
    def from_vector(cls, m: int, coeffs, hbar: float = 1.0):
        """Numeric multivector from a dense length-``2**m`` coefficient vector."""
        return cls(m, np.asarray(coeffs, dtype=np.complex128)[None, :], 0, hbar)

    def _new(self, data, lo=0, m=None):
        return type(self)(self.m if m is None else m, data, lo, self.hbar)

    def like_scalar(self, c):
        """Scalar multivector in the same algebra and mode as ``self``."""
        return type(self).from_masks(self.m, {0: c}, formal=self.formal, hbar=self.hbar or 1.0)

    def like_zero(self):
        return type(self).zero(self.m, formal=self.formal, hbar=self.hbar or 1.0)

    # ------------------------------------------------------------- inspection
    @property
    def formal(self) -> bool:
        return self.data.dtype == object

    @property
    def mode(self) -> str:
        return "formal" if self.formal else "numeric"

    @property
    def dim(self) -> int:
        return 1 << self.m

    @property
    def vector(self) -> np.ndarray:
        """Dense numeric coefficient vector (numeric mode only)."""
        if self.formal:
            raise ModeError("formal multivectors have no numeric coefficient vector")
        return self.data[0]

    def support(self) -> np.ndarray:
        """Masks with a nonzero coefficient, in increasing order."""
        return np.flatnonzero(_nonzero_mask(self.data).any(axis=0))

    def is_zero(self) -> bool:
        return self.support().size == 0

    def coefficient(self, mask: int):
        """Coefficient of a mask: complex (numeric) or Laurent (formal)."""
        mask = int(mask)
        if not self.formal:
            return complex(self.data[0, mask])
        return Laurent(list(self.data[:, mask]), self.lo)

    def __getitem__(self, indices):
        if isinstance(indices, (int, np.integer)):
            indices = (int(indices),)
        sign, mask = _sort_sign(tuple(indices), self.m)
        if sign == 0:
            return 0j if not self.formal else Laurent()
        c = self.coefficient(mask)
        return c if sign > 0 else -c

    def terms(self):
        """Iterate ``(index tuple, coefficient)`` over the nonzero terms."""
        for mask in self.support():
            yield indices_from_mask(int(mask)), self.coefficient(int(mask))

    def grade(self, k: int):
        """Homogeneous component of degree ``k``."""
        keep = _bits.popcount(self.m) == k
        data = self.data.copy()
        data[:, ~keep] = 0
        return self._new(data, self.lo)

    def even_part(self):
        keep = (_bits.popcount(self.m) & 1) == 0
        data = self.data.copy()
        data[:, ~keep] = 0
        return self._new(data, self.lo)

    def odd_part(self):
        return self - self.even_part()

    def degrees(self) -> set[int]:
        return set(int(d) for d in _bits.popcount(self.m)[self.support()])

    def parity(self) -> int | None:
        """0 or 1 for elements of definite parity, None otherwise (0 for zero)."""
        pars = {d & 1 for d in self.degrees()}
        if not pars:
            return 0
        return pars.pop() if len(pars) == 1 else None

    @property
    def degree(self) -> int:
        """Largest Grassmann degree present (-1 for zero)."""
        degs = self.degrees()
        return max(degs) if degs else -1

    @property
    def hbar_degree(self) -> int | None:
        """Highest power of hbar present in formal mode (None for zero)."""
        if not self.formal:
            raise ModeError("hbar degree only exists in formal mode")
        if self.is_zero():
            return None
        return self.lo + self.data.shape[0] - 1

    @property
    def hbar_low_degree(self) -> int | None:
        if not self.formal:
            raise ModeError("hbar degree only exists in formal mode")
        return None if self.is_zero() else self.lo

    def hbar_coefficient(self, power: int):
        """Formal coefficient of ``hbar**power`` as an hbar-free formal element."""
        if not self.formal:
            raise ModeError("hbar coefficients only exist in formal mode")
        k = power - self.lo
        if 0 <= k < self.data.shape[0]:
            return self._new(self.data[k:k + 1].copy(), 0)
        return self.like_zero()

    def evaluate(self, hbar: float):
        """Numeric multivector obtained by substituting a value for hbar."""
        if not self.formal:
            return self
        vec = np.zeros(self.dim, dtype=np.complex128)
        to_c = np.frompyfunc(complex, 1, 1)
        for p in range(self.data.shape[0]):
            layer = to_c(self.data[p]).astype(np.complex128)
            vec += layer * float(hbar) ** (self.lo + p)
        return type(self)(self.m, vec[None, :], 0, hbar)

    def to_formal(self):
        """Exact copy of a numeric element (doubles are converted bit-exactly)."""
        if self.formal:
            return self
        data = np.empty((1, self.dim), dtype=object)
        data[0] = [exact(c) for c in self.data[0]]
        return type(self)(self.m, data, 0, None)

    def with_hbar(self, hbar: float):
        """Numeric element with the same coefficients tagged with another hbar."""
        if self.formal:
            raise ModeError("formal elements carry a symbolic hbar")
        return type(self)(self.m, self.data, 0, hbar)

    def norm(self) -> float:
        if self.formal:
            return self.evaluate(1.0).norm()
        return float(np.linalg.norm(self.data[0]))

    def allclose(self, other, atol: float = 1e-12, rtol: float = 1e-12) -> bool:
        a = self.evaluate(1.0) if self.formal else self
        b = other.evaluate(1.0) if other.formal else other
        if a.m != b.m:
            return False
        return bool(np.allclose(a.data[0], b.data[0], atol=atol, rtol=rtol))

    def conj(self):
        """Complex conjugation of the coefficients (hbar treated as real)."""
        if self.formal:
            conj = np.frompyfunc(lambda x: x.conjugate() if x else 0, 1, 1)
            return self._new(conj(self.data), self.lo)
        return self._new(np.conj(self.data))

    # -------------------------------------------------------------- arithmetic
    def _check(self, other):
        if not isinstance(other, Multivector):
            raise TypeError(f"expected a multivector, got {type(other).__name__}")
        if other.m != self.m:
            raise DimensionError(f"generator counts differ: {self.m} vs {other.m}")
        if other.formal != self.formal:
            raise ModeError("cannot mix numeric and formal multivectors")
        if not self.formal and other.hbar != self.hbar:
            raise ModeError(f"hbar values differ: {self.hbar} vs {other.hbar}")

    def __add__(self, other):
        if not isinstance(other, Multivector):
            if isinstance(other, (numbers.Number, GaussianRational, Laurent)):
                other = self.like_scalar(other)
            else:
                return NotImplemented
        self._check(other)
        if not self.formal:
            return self._new(self.data + other.data)
        data, lo = _add_layers(self.data, self.lo, other.data, other.lo)
        return self._new(data, lo)

    __radd__ = __add__

    def __neg__(self):
        if self.formal:
            return self._new(_neg_obj(self.data), self.lo)
        return self._new(-self.data)

    def __sub__(self, other):
        if isinstance(other, (Multivector, numbers.Number, GaussianRational, Laurent)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        """Multiply by a scalar (number, Gaussian rational or Laurent in hbar)."""
        if not self.formal:
            return self._new(self.data * _numeric_scalar(c, self.hbar))
        lo, coeffs = _formal_scalar(c)
        if not coeffs:
            return self.like_zero()
        out = _zeros(self.data.shape[0] + len(coeffs) - 1, self.dim, True)
        for k, v in enumerate(coeffs):
            if v != 0:
                out[k:k + self.data.shape[0]] += self.data * v
        return self._new(out, self.lo + lo)

    def __mul__(self, other):
        if isinstance(other, (numbers.Number, GaussianRational, Laurent)):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Laurent):
            return self.scale(other ** -1)
        if self.formal:
            return self.scale(GaussianRational(1) / exact(other))
        return self.scale(1.0 / complex(other))

    def __xor__(self, other):
        return wedge(self, other)

    def shift_hbar(self, power: int):
        """Multiply by ``hbar**power`` (exact in formal mode)."""
        if self.formal:
            return self._new(self.data, self.lo + power)
        return self._new(self.data * self.hbar ** power)

    def __eq__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        if other.m != self.m or other.formal != self.formal:
            return False
        if not self.formal:
            return other.hbar == self.hbar and bool(np.array_equal(self.data, other.data))
        return (self - other).is_zero()

    __hash__ = None

    def __repr__(self):
        if self.is_zero():
            body = "0"
        else:
            parts = []
            for idx, c in self.terms():
                mono = "".join(f"θ{mu}" for mu in idx) or "1"
                parts.append(f"({c})·{mono}")
            body = " + ".join(parts)
        tag = f"hbar={self.hbar}" if not self.formal else "formal"
        return f"{type(self).__name__}(m={self.m}, {tag}: {body})"

    # ---------------------------------------------------------- serialisation
    def to_json(self) -> dict:
        out = {"m": self.m, "mode": self.mode}
        if not self.formal:
            out["hbar"] = self.hbar
        terms = []
        for mask in self.support():
            mask = int(mask)
            entry = {"mask": list(indices_from_mask(mask))}
            if not self.formal:
                c = complex(self.data[0, mask])
                entry["re"], entry["im"] = c.real, c.imag
            else:
                lau = {}
                for p in range(self.data.shape[0]):
                    v = self.data[p, mask]
                    if v:
                        v = exact(v)
                        lau[str(self.lo + p)] = [_json_rational(v.re), _json_rational(v.im)]
                entry["laurent"] = lau
            terms.append(entry)
        out["terms"] = terms
        if self.algebra != "grassmann":
            out["algebra"] = self.algebra
        return out

    @classmethod
    def from_json(cls, obj: dict):
        if cls is Multivector and obj.get("algebra") == "clifford":
            from .clifford import CliffordElement
            return CliffordElement.from_json(obj)
        try:
            m = int(obj["m"])
            mode = obj.get("mode", "numeric")
            terms = obj["terms"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"multivector JSON is missing field {exc}") from exc
        if mode not in ("numeric", "formal"):
            raise ValueError(f"unknown mode {mode!r}")
        formal = mode == "formal"
        hbar = float(obj.get("hbar", 1.0))
        coeffs = {}
        for pos, term in enumerate(terms):
            try:
                mask_list = term["mask"]
            except (KeyError, TypeError) as exc:
                raise ValueError(f"terms[{pos}]: missing 'mask'") from exc
            if list(mask_list) != sorted(set(mask_list)):
                raise ValueError(f"terms[{pos}]: mask must be a strictly increasing index list")
            for mu in mask_list:
                if not 1 <= int(mu) <= m:
                    raise ValueError(f"terms[{pos}]: generator {mu} out of range 1..{m}")
            mask = mask_from_indices(mask_list)
            if mask in coeffs:
                raise ValueError(f"terms[{pos}]: duplicate mask {mask_list}")
            if "laurent" in term:
                lau = {}
                for power, pair in term["laurent"].items():
                    lau[int(power)] = GaussianRational(_parse_rational(pair[0]), _parse_rational(pair[1]))
                value = Laurent(lau) if formal else Laurent(lau).evaluate(hbar)
            else:
                re = _parse_rational(term.get("re", 0))
                im = _parse_rational(term.get("im", 0))
                value = GaussianRational(re, im) if formal else complex(float(re), float(im))
            coeffs[mask] = value
        return cls.from_masks(m, coeffs, formal=formal, hbar=hbar)


class DoubledMultivector(Multivector):
    """Multivector on ``2m`` generators read as a graded tensor product.

    Generators ``1..m`` carry the first slot and ``m+1..2m`` the second.
    """

    __slots__ = ()

    def __init__(self, m: int, data, lo: int = 0, hbar: float | None = 1.0):
        if m % 2:
            raise DimensionError("a doubled algebra needs an even generator count")
        super().__init__(m, data, lo, hbar)

    @property
    def base_m(self) -> int:
        return self.m // 2

    def as_multivector(self) -> Multivector:
        return Multivector(self.m, self.data, self.lo, self.hbar)


# ---------------------------------------------------------------- helpers


def _numeric_scalar(c, hbar) -> complex:
    if isinstance(c, Laurent):
        return c.evaluate(hbar)
    return complex(c)


def _formal_scalar(c):
    if isinstance(c, Laurent):
        return c.lo, list(c.coeffs)
    if isinstance(c, float) and not math.isfinite(c):
        raise ValueError("non-finite scalar in formal mode")
    v = exact(c)
    return (0, [v]) if v else (0, [])


def _add_layers(a, alo, b, blo):
    lo = min(alo, blo)
    hi = max(alo + a.shape[0], blo + b.shape[0])
    out = _zeros(hi - lo, a.shape[1], True)
    out[alo - lo:alo - lo + a.shape[0]] += a
    out[blo - lo:blo - lo + b.shape[0]] += b
    return out, lo


def _sort_sign(indices: tuple, m: int):
    """Sign and mask of the ordered monomial equal to theta^{i1}...theta^{ik}."""
    for mu in indices:
        _check_index(mu, m)
    if len(set(indices)) != len(indices):
        return 0, 0
    inversions = sum(1 for a in range(len(indices)) for b in range(a + 1, len(indices))
                     if indices[a] > indices[b])
    return (-1 if inversions & 1 else 1), mask_from_indices(indices)


def _check_index(mu, m):
    if not isinstance(mu, (int, np.integer)) or not 1 <= mu <= m:
        raise IndexError(f"generator index {mu} out of range 1..{m}")


def _json_rational(x):
    if x.denominator == 1:
        return int(x.numerator)
    d = int(x.denominator)
    if d & (d - 1) == 0 and d <= 1 << 52:
        return float(x)
    return f"{int(x.numerator)}/{d}"


def _parse_rational(x):
    if isinstance(x, str):
        from fractions import Fraction
        return Fraction(x)
    if isinstance(x, bool):
        raise ValueError("boolean is not a coefficient")
    return x


def _check_pair(f: Multivector, g: Multivector):
    if not isinstance(f, Multivector) or not isinstance(g, Multivector):
        raise TypeError("operands must be multivectors")
    if f.m != g.m:
        raise DimensionError(f"generator counts differ: {f.m} vs {g.m}")
    if f.formal != g.formal:
        raise ModeError("cannot mix numeric and formal multivectors")
    if not f.formal and f.hbar != g.hbar:
        raise ModeError(f"hbar values differ: {f.hbar} vs {g.hbar}")


# ------------------------------------------------------------- array kernels


def _wedge_data(fdata, gdata, m, f_support=None, g_support=None):
    """Layered wedge product of raw coefficient arrays."""
    formal = fdata.dtype == object
    sa = np.flatnonzero(_nonzero_mask(fdata).any(axis=0)) if f_support is None else f_support
    sb = np.flatnonzero(_nonzero_mask(gdata).any(axis=0)) if g_support is None else g_support
    n = 1 << m
    layers = fdata.shape[0] + gdata.shape[0] - 1
    out = _zeros(layers, n, formal)
    if sa.size == 0 or sb.size == 0:
        return out
    A = np.repeat(sa, sb.size)
    B = np.tile(sb, sa.size)
    keep = (A & B) == 0
    A, B = A[keep], B[keep]
    if A.size == 0:
        return out
    neg = _bits.wedge_sign_parity(A, B, m) == 1
    tgt = A | B
    if not formal:
        vals = fdata[0, A] * gdata[0, B] * np.where(neg, -1.0, 1.0)
        np.add.at(out[0], tgt, vals)
        return out
    for i in range(fdata.shape[0]):
        fa = fdata[i, A]
        if not _nonzero_mask(fa).any():
            continue
        for j in range(gdata.shape[0]):
            vals = fa * gdata[j, B]
            if neg.any():
                vals[neg] = _neg_obj(vals[neg])
            np.add.at(out[i + j], tgt, vals)
    return out


def _derivative_data(data, nbits, bit, extra_neg=None):
    """Apply d/dtheta for generator ``bit`` to raw layered data."""
    src, tgt, neg = _bits.derivative_table(nbits, bit)
    if extra_neg is not None:
        neg = neg ^ extra_neg[src]
    formal = data.dtype == object
    out = _zeros(data.shape[0], data.shape[1], formal)
    if formal:
        live = _nonzero_mask(data[:, src]).any(axis=0)
        src, tgt, neg = src[live], tgt[live], neg[live]
        if src.size == 0:
            return out
    out[:, tgt] = _negate_columns(data[:, src], neg)
    return out


def _relabel_data(data, src_bits, dst_bits, images):
    tgt, neg, valid = _bits.relabel_table(src_bits, tuple(images))
    formal = data.dtype == object
    src = np.flatnonzero(valid)
    if formal:
        live = _nonzero_mask(data[:, src]).any(axis=0)
        src = src[live]
    out = _zeros(data.shape[0], 1 << dst_bits, formal)
    if src.size == 0:
        return out
    vals = _negate_columns(data[:, src], neg[src])
    for p in range(data.shape[0]):
        np.add.at(out[p], tgt[src], vals[p])
    return out


# -------------------------------------------------------------- operations


def wedge(f: Multivector, g: Multivector) -> Multivector:
    """Exterior product f ∧ g."""
    _check_pair(f, g)
    if f.algebra != g.algebra:
        raise TypeError("wedge needs two elements of the same algebra")
    return f._new(_wedge_data(f.data, g.data, f.m), f.lo + g.lo)


def fermi_derivative(mu: int, f: Multivector) -> Multivector:
    """Left derivative d/dtheta^mu (sign from the generators preceding mu)."""
    _check_index(mu, f.m)
    return f._new(_derivative_data(f.data, f.m, mu - 1), f.lo)


def signed_derivative(mu: int, f: Multivector) -> Multivector:
    """(-1)^(|f|-1) d/dtheta^mu applied per homogeneous component."""
    _check_index(mu, f.m)
    # removing one generator: the sign follows the degree of the source mask
    even_src = (_bits.popcount(f.m) & 1) == 0
    return f._new(_derivative_data(f.data, f.m, mu - 1, extra_neg=even_src), f.lo)


def berezin_integral(f: Multivector):
    """Coefficient of theta^1...theta^m (orientation epsilon^{12...m} = 1)."""
    return f.coefficient((1 << f.m) - 1)


def exp_even(f: Multivector) -> Multivector:
    """Exponential of an even element, a finite sum by nilpotency."""
    if any(d & 1 for d in f.degrees()):
        raise ParityError("exp_even needs an element without odd-degree terms")
    s = f.coefficient(0)
    nil = f - f.grade(0)
    total = f.like_scalar(1)
    term = total
    for k in range(1, f.m // 2 + 1):
        term = wedge(term, nil)
        if term.is_zero():
            break
        total = total + term / math.factorial(k)
    if f.formal:
        if s:
            raise ModeError("exp of a nonzero scalar part is not a Laurent polynomial")
        return total
    return total.scale(np.exp(s))


def tensor_embed(f: Multivector, g: Multivector) -> DoubledMultivector:
    """theta^A ⊗ theta^B ↦ theta^A ∧ theta'^B on 2m generators, no extra sign."""
    _check_pair(f, g)
    m, n = f.m, f.dim
    formal = f.formal
    layers = f.data.shape[0] + g.data.shape[0] - 1
    out = _zeros(layers, n * n, formal)
    # doubled index A + (B << m) laid out as [B, A]
    view = out.reshape(layers, n, n)
    for i in range(f.data.shape[0]):
        for j in range(g.data.shape[0]):
            view[i + j] += np.outer(g.data[j], f.data[i])
    return DoubledMultivector(2 * m, out, f.lo + g.lo, f.hbar)


def _as_doubled(F) -> DoubledMultivector:
    if isinstance(F, DoubledMultivector):
        return F
    if isinstance(F, Multivector) and F.m % 2 == 0:
        return DoubledMultivector(F.m, F.data, F.lo, F.hbar)
    raise DimensionError("expected a doubled multivector")


def diagonal_pullback(F: Multivector) -> Multivector:
    """Δ^*: substitute theta'^mu -> theta^mu and reduce with wedge rules."""
    F = _as_doubled(F)
    m = F.base_m
    images = tuple(list(range(m)) + list(range(m)))
    return Multivector(m, _relabel_data(F.data, 2 * m, m, images), F.lo, F.hbar)


def graded_flip(F: Multivector) -> DoubledMultivector:
    """σ₂: exchange the two slots with the Koszul sign (-1)^(|f||g|)."""
    F = _as_doubled(F)
    m = F.base_m
    images = tuple(list(range(m, 2 * m)) + list(range(m)))
    return DoubledMultivector(2 * m, _relabel_data(F.data, 2 * m, 2 * m, images), F.lo, F.hbar)


def triple_embed(f: Multivector, g: Multivector, h: Multivector) -> Multivector:
    """theta^A ⊗ theta^B ⊗ theta^C on 3m generators (no extra sign)."""
    _check_pair(f, g)
    _check_pair(f, h)
    m, n = f.m, f.dim
    F = tensor_embed(f, g)
    layers = F.data.shape[0] + h.data.shape[0] - 1
    out = _zeros(layers, n ** 3, f.formal)
    view = out.reshape(layers, n, n * n)
    for i in range(F.data.shape[0]):
        for j in range(h.data.shape[0]):
            view[i + j] += np.outer(h.data[j], F.data[i])
    return Multivector(3 * m, out, F.lo + h.lo, f.hbar)


def tri_diagonal_pullback(F: Multivector, m: int, order: str = "left") -> Multivector:
    """Pull a 3m-generator element back to the diagonal in two stages.

    ``order="left"`` merges the first two slots first, i.e. (Δ×1) then Δ;
    ``order="right"`` merges the last two first, i.e. (1×Δ) then Δ.
    """
    if F.m != 3 * m:
        raise DimensionError("tri-diagonal pullback needs 3m generators")
    if order == "left":
        stage = tuple(list(range(m)) + list(range(m)) + list(range(m, 2 * m)))
    elif order == "right":
        stage = tuple(list(range(m)) + list(range(m, 2 * m)) + list(range(m, 2 * m)))
    else:
        raise ValueError("order must be 'left' or 'right'")
    mid = _relabel_data(F.data, 3 * m, 2 * m, stage)
    final = _relabel_data(mid, 2 * m, m, tuple(list(range(m)) + list(range(m))))
    return Multivector(m, final, F.lo, F.hbar)


def slot_derivative(slot: int, mu: int, F: Multivector) -> DoubledMultivector:
    """Derivative acting on one slot of a doubled element, Koszul sign included.

    On the second slot this is d/dtheta'^mu in the 2m-generator algebra, which
    carries the sign (-1)^|f| of passing the first-slot factor.
    """
    F = _as_doubled(F)
    m = F.base_m
    _check_index(mu, m)
    if slot not in (1, 2):
        raise ValueError("slot must be 1 or 2")
    bit = mu - 1 if slot == 1 else m + mu - 1
    return DoubledMultivector(F.m, _derivative_data(F.data, F.m, bit), F.lo, F.hbar)


def linear_substitution(f: Multivector, matrix, target_m: int | None = None) -> Multivector:
    """Algebra morphism theta^mu -> sum_nu matrix[mu-1, nu-1] theta^nu.

    ``matrix`` is m x M; the image lives on ``target_m = M`` generators, which
    allows substitutions such as theta -> theta + s theta' into a larger
    algebra.
    """
    matrix = np.asarray(matrix)
    m = f.m
    target_m = matrix.shape[1] if target_m is None else target_m
    if matrix.shape != (m, target_m):
        raise DimensionError("substitution matrix has the wrong shape")
    formal = f.formal
    hbar = f.hbar or 1.0
    if formal:
        rows = [{1 << j: matrix[i, j] for j in range(target_m) if matrix[i, j] != 0} for i in range(m)]
    else:
        rows = [{1 << j: complex(matrix[i, j]) for j in range(target_m)} for i in range(m)]
    images = [Multivector.from_masks(target_m, r, formal=formal, hbar=hbar).data for r in rows]
    support = f.support()
    # image[mask] = image[mask without top bit] ∧ image[top generator]
    cache = {0: Multivector.scalar(1, target_m, formal=formal, hbar=hbar).data}
    needed = set()
    for mask in support:
        mask = int(mask)
        while mask:
            needed.add(mask)
            mask &= ~(1 << (mask.bit_length() - 1))
    for mask in sorted(needed):
        top = mask.bit_length() - 1
        rest = mask & ~(1 << top)
        cache[mask] = _wedge_data(cache[rest], images[top], target_m)
    out = _zeros(f.data.shape[0], 1 << target_m, formal)
    for mask in support:
        mask = int(mask)
        img = cache[mask]
        for p in range(f.data.shape[0]):
            c = f.data[p, mask]
            if c:
                out[p] += img[0] * c
    return type(f)(target_m, out, f.lo, f.hbar)
