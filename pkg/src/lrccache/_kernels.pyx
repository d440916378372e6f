# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: victim selection and mid-rank percentiles."""

ctypedef long long i64


def select_victim(const i64[:] primary, const i64[:] secondary,
                  const i64[:] slots, Py_ssize_t n, const unsigned char[:] pinned):
    """Slot minimizing (primary, secondary, slot) among unpinned ``slots[:n]``.

    Returns -1 when every candidate is pinned.
    """
    cdef Py_ssize_t i, s, best = -1
    cdef i64 bp = 0, bs = 0, p, q
    for i in range(n):
        s = slots[i]
        if pinned[s]:
            continue
        p = primary[s]
        q = secondary[s]
        if best < 0 or p < bp or (p == bp and (q < bs or (q == bs and s < best))):
            best = s
            bp = p
            bs = q
    return best


def midrank_percentile(const i64[:] values, const i64[:] slots, Py_ssize_t n, i64 target):
    """100 * (#below + (#equal + 1) / 2) / n over ``values[slots[:n]]``."""
    cdef Py_ssize_t i, below = 0, equal = 0
    cdef i64 v
    if n == 0:
        return 0.0
    for i in range(n):
        v = values[slots[i]]
        below += v < target  # branch-free: values are often near-random
        equal += v == target
    return 100.0 * (below + (equal + 1) / 2.0) / n
