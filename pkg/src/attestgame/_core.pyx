# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled exhaustive-enumeration kernel for attacker best responses.

Walks all 2^n attack vectors in Gray-code order, maintaining the attacker's
utility incrementally (one device flip per step, class exploit costs charged
on the 0->1 member-count transition).  Ties on utility break toward fewer
attacked devices, then lexicographically smallest 0/1 vector (device 0 most
significant).  Callers recompute the winner's utility by direct summation;
the incremental value is only used for comparisons.
"""

import numpy as np

from .errors import EnumerationCapError

HARD_LIMIT = 62


cdef long long _lex_key(unsigned long long mask, Py_ssize_t n) noexcept nogil:
    # numeric order of the key == lexicographic order of the 0/1 vector
    cdef long long key = 0
    cdef Py_ssize_t i
    for i in range(n):
        key = (key << 1) | <long long>((mask >> i) & 1ULL)
    return key


cdef unsigned long long _enumerate_one(const double* values,
                                       const long long* class_index,
                                       const double* class_cost,
                                       Py_ssize_t n,
                                       long long* attacked_in_class,
                                       Py_ssize_t n_classes) noexcept nogil:
    cdef unsigned long long mask = 0, best_mask = 0, step, t, bit
    cdef double util = 0.0, best_util = 0.0
    cdef Py_ssize_t pop = 0, best_pop = 0
    cdef long long best_lex = 0, lex
    cdef Py_ssize_t i, c
    cdef unsigned long long total = 1ULL << n
    cdef bint take

    for c in range(n_classes):
        attacked_in_class[c] = 0

    for step in range(1, total):
        t = step
        i = 0
        while not (t & 1ULL):
            t >>= 1
            i += 1
        bit = 1ULL << i
        c = <Py_ssize_t>class_index[i]
        if mask & bit:
            mask ^= bit
            util -= values[i]
            pop -= 1
            attacked_in_class[c] -= 1
            if attacked_in_class[c] == 0:
                util += class_cost[c]
        else:
            mask |= bit
            util += values[i]
            pop += 1
            attacked_in_class[c] += 1
            if attacked_in_class[c] == 1:
                util -= class_cost[c]

        take = False
        if util > best_util:
            take = True
        elif util == best_util:
            if pop < best_pop:
                take = True
            elif pop == best_pop:
                lex = _lex_key(mask, n)
                if lex < best_lex:
                    take = True
        if take:
            best_mask = mask
            best_util = util
            best_pop = pop
            best_lex = _lex_key(mask, n)
    return best_mask


def best_attack(values, class_index, class_cost):
    """Return the mask (bit i == device i) of a best attack vector."""
    cdef double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef long long[::1] ci = np.ascontiguousarray(class_index, dtype=np.int64)
    cdef double[::1] cc = np.ascontiguousarray(class_cost, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0]
    if n > HARD_LIMIT:
        raise EnumerationCapError(f"cannot enumerate 2^{n} attack vectors")
    if n == 0:
        return 0
    scratch = np.zeros(max(cc.shape[0], 1), dtype=np.int64)
    cdef long long[::1] sc = scratch
    cdef unsigned long long mask
    with nogil:
        mask = _enumerate_one(&v[0], &ci[0], &cc[0], n, &sc[0], cc.shape[0])
    return int(mask)


def best_attack_batch(values, class_index, class_cost):
    """Row-wise `best_attack` over a (samples, devices) value matrix."""
    cdef double[:, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef long long[::1] ci = np.ascontiguousarray(class_index, dtype=np.int64)
    cdef double[::1] cc = np.ascontiguousarray(class_cost, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[1]
    cdef Py_ssize_t rows = v.shape[0]
    if n > HARD_LIMIT:
        raise EnumerationCapError(f"cannot enumerate 2^{n} attack vectors")
    out = np.zeros(rows, dtype=np.int64)
    if n == 0 or rows == 0:
        return out
    cdef long long[::1] om = out
    scratch = np.zeros(max(cc.shape[0], 1), dtype=np.int64)
    cdef long long[::1] sc = scratch
    cdef Py_ssize_t r
    with nogil:
        for r in range(rows):
            om[r] = <long long>_enumerate_one(&v[r, 0], &ci[0], &cc[0], n,
                                              &sc[0], cc.shape[0])
    return out
