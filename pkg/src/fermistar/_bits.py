"""Cached bitmask tables shared by the Grassmann and Clifford kernels.

Generator ``mu`` (1-based) is stored in bit ``mu - 1``; a mask therefore
encodes the ordered monomial with increasing generator indices.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

MAX_GENERATORS = 16


@lru_cache(maxsize=None)
def popcount(nbits: int) -> np.ndarray:
    """Popcount of every mask below ``2**nbits``."""
    pc = np.zeros(1 << nbits, dtype=np.int64)
    for b in range(nbits):
        pc[1 << b:1 << (b + 1)] = pc[:1 << b] + 1
    pc.setflags(write=False)
    return pc


def popcount_of(masks: np.ndarray) -> np.ndarray:
    masks = np.asarray(masks, dtype=np.int64)
    out = np.zeros(masks.shape, dtype=np.int64)
    x = masks.copy()
    while np.any(x):
        out += x & 1
        x >>= 1
    return out


def mask_from_indices(indices) -> int:
    mask = 0
    for mu in indices:
        bit = 1 << (int(mu) - 1)
        if mask & bit:
            raise ValueError(f"repeated generator {mu} in monomial")
        mask |= bit
    return mask


def indices_from_mask(mask: int) -> tuple[int, ...]:
    out = []
    mu = 1
    while mask:
        if mask & 1:
            out.append(mu)
        mask >>= 1
        mu += 1
    return tuple(out)


@lru_cache(maxsize=None)
def derivative_table(nbits: int, bit: int):
    """Masks containing ``bit``, their images with it removed, and sign flags.

    The sign of removing generator ``bit`` is (-1) to the number of set bits
    below it.
    """
    masks = np.arange(1 << nbits, dtype=np.int64)
    src = masks[(masks >> bit) & 1 == 1]
    tgt = src ^ (1 << bit)
    below = popcount(nbits)[src & ((1 << bit) - 1)]
    neg = (below & 1) == 1
    for arr in (src, tgt, neg):
        arr.setflags(write=False)
    return src, tgt, neg


def wedge_sign_parity(a: np.ndarray, b: np.ndarray, nbits: int) -> np.ndarray:
    """Parity of the number of pairs (i in a, j in b) with i > j."""
    pc = popcount(nbits)
    s = np.zeros(np.shape(a), dtype=np.int64)
    for i in range(1, nbits):
        s += ((a >> i) & 1) * pc[b & ((1 << i) - 1)]
    return s & 1


@lru_cache(maxsize=None)
def relabel_table(src_bits: int, images: tuple[int, ...]):
    """Map each source monomial through a generator relabelling.

    ``images[i]`` is the target bit of source bit ``i``.  Returns target masks,
    sign flags and a validity flag (False when two generators collide, so the
    monomial vanishes).
    """
    masks = np.arange(1 << src_bits, dtype=np.int64)
    tgt = np.zeros_like(masks)
    parity = np.zeros_like(masks)
    valid = np.ones(masks.shape, dtype=bool)
    for i in range(src_bits):
        has_i = (masks >> i) & 1 == 1
        hit = has_i & ((tgt >> images[i]) & 1 == 1)
        valid &= ~hit
        tgt |= np.where(has_i, 1 << images[i], 0)
        for j in range(i):
            if images[j] > images[i]:
                parity += has_i & ((masks >> j) & 1 == 1)
    neg = (parity & 1) == 1
    for arr in (tgt, neg, valid):
        arr.setflags(write=False)
    return tgt, neg, valid
