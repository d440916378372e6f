"""Numpy fallback for the compiled kernels; same signatures and results."""
import numpy as np


def select_victim(primary, secondary, slots, n, pinned):
    cand = np.asarray(slots[:n])
    cand = cand[np.asarray(pinned)[cand] == 0]
    if cand.size == 0:
        return -1
    order = np.lexsort((cand, np.asarray(secondary)[cand], np.asarray(primary)[cand]))
    return int(cand[order[0]])


def midrank_percentile(values, slots, n, target):
    if n == 0:
        return 0.0
    v = np.asarray(values)[np.asarray(slots[:n])]
    below = int(np.count_nonzero(v < target))
    equal = int(np.count_nonzero(v == target))
    return 100.0 * (below + (equal + 1) / 2.0) / n
