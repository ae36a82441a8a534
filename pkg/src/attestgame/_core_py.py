"""Pure-NumPy fallback for the exhaustive-enumeration kernel.

Same contract as the compiled module: enumerate all 2^n attack vectors and
return a utility-maximizing mask, ties broken toward fewer attacked devices
and then the lexicographically smallest 0/1 vector.  Masks are scanned in
that canonical order, so the first maximum encountered is the winner.
"""

from __future__ import annotations

import numpy as np

from .errors import EnumerationCapError

HARD_LIMIT = 62

# chunk sizes keep the utilities matrices around a few tens of MB
_TARGET_ELEMS = 4_000_000


def _canonical_masks(n: int) -> np.ndarray:
    """All 2^n masks sorted by (popcount, lexicographic vector order)."""
    masks = np.arange(1 << n, dtype=np.uint64)
    pop = np.zeros(masks.shape, dtype=np.int64)
    lex = np.zeros(masks.shape, dtype=np.int64)
    for i in range(n):
        bit = ((masks >> np.uint64(i)) & np.uint64(1)).astype(np.int64)
        pop += bit
        lex += bit << (n - 1 - i)
    order = np.lexsort((lex, pop))
    return masks[order]


def _bits(masks: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(n, dtype=np.uint64)
    return ((masks[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.float64)


def _class_costs_for(bits: np.ndarray, class_index: np.ndarray, class_cost: np.ndarray) -> np.ndarray:
    cc = np.zeros(bits.shape[0])
    for c in range(len(class_cost)):
        members = class_index == c
        if members.any():
            cc += class_cost[c] * (bits[:, members].sum(axis=1) > 0)
    return cc


def best_attack(values, class_index, class_cost):
    """Return the mask (bit i == device i) of a best attack vector."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    ci = np.ascontiguousarray(class_index, dtype=np.int64)
    cc = np.ascontiguousarray(class_cost, dtype=np.float64)
    n = v.shape[0]
    if n > HARD_LIMIT:
        raise EnumerationCapError(f"cannot enumerate 2^{n} attack vectors")
    if n == 0:
        return 0
    masks = _canonical_masks(n)
    best_mask = 0
    best_util = -np.inf
    chunk = max(1, _TARGET_ELEMS // max(n, 1))
    for start in range(0, len(masks), chunk):
        mchunk = masks[start:start + chunk]
        bits = _bits(mchunk, n)
        utils = bits @ v - _class_costs_for(bits, ci, cc)
        j = int(np.argmax(utils))
        if utils[j] > best_util:
            best_util = float(utils[j])
            best_mask = int(mchunk[j])
    return best_mask


def best_attack_batch(values, class_index, class_cost):
    """Row-wise `best_attack` over a (samples, devices) value matrix."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    ci = np.ascontiguousarray(class_index, dtype=np.int64)
    cc = np.ascontiguousarray(class_cost, dtype=np.float64)
    rows, n = v.shape
    if n > HARD_LIMIT:
        raise EnumerationCapError(f"cannot enumerate 2^{n} attack vectors")
    out = np.zeros(rows, dtype=np.int64)
    if n == 0 or rows == 0:
        return out
    masks = _canonical_masks(n)
    mask_chunk = max(1, _TARGET_ELEMS // max(n, 1))
    row_chunk = max(1, _TARGET_ELEMS // min(len(masks), mask_chunk))
    for start in range(0, rows, row_chunk):
        block = v[start:start + row_chunk]
        best_util = np.full(block.shape[0], -np.inf)
        best_mask = np.zeros(block.shape[0], dtype=np.int64)
        for mstart in range(0, len(masks), mask_chunk):
            mchunk = masks[mstart:mstart + mask_chunk]
            bits = _bits(mchunk, n)
            utils = block @ bits.T - _class_costs_for(bits, ci, cc)[None, :]
            picks = np.argmax(utils, axis=1)
            top = utils[np.arange(block.shape[0]), picks]
            better = top > best_util  # strict: earlier canonical masks win ties
            best_util[better] = top[better]
            best_mask[better] = mchunk[picks[better]].astype(np.int64)
        out[start:start + row_chunk] = best_mask
    return out
