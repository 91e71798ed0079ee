"""Enumeration of a linear rank statistic over all permutations.

The main route walks the permutations of a suffix in Heap's order, where
consecutive permutations differ by one transposition, and updates
``L = sum_i a[i, s_i]`` with the four affected scores.  The permutation
space is split into work units by a fixed prefix so that units can run
on separate threads (numba releases the GIL); merging concatenates units
in a fixed order, so the multiset never depends on the split.

``table_linear_statistics`` recomputes every value from scratch on an
explicit permutation table and serves as the debug cross-check.
"""

from concurrent.futures import ThreadPoolExecutor
from itertools import permutations
from math import factorial

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _heap_walk(a, s, start, out):
    n = s.shape[0]
    m = n - start
    total = 0
    for i in range(n):
        total += a[i, s[i] - 1]
    c = np.zeros(m, np.int64)
    k = 0
    out[k] = total
    k += 1
    i = 1
    while i < m:
        if c[i] < i:
            if i % 2 == 0:
                x = start
            else:
                x = start + c[i]
            y = start + i
            sx = s[x]
            sy = s[y]
            total += a[x, sy - 1] + a[y, sx - 1] - a[x, sx - 1] - a[y, sy - 1]
            s[x] = sy
            s[y] = sx
            out[k] = total
            k += 1
            c[i] += 1
            i = 1
        else:
            c[i] = 0
            i += 1
    return k


def work_units(n, depth):
    """Prefixes (tuples of fixed leading values) defining the work units."""
    depth = max(0, min(depth, n - 1))
    return list(permutations(range(1, n + 1), depth))


def _run_unit(a, prefix):
    n = a.shape[0]
    rest = [v for v in range(1, n + 1) if v not in prefix]
    s = np.array(list(prefix) + rest, dtype=np.int64)
    out = np.empty(factorial(n - len(prefix)), dtype=np.int64)
    _heap_walk(a, s, len(prefix), out)
    return out


def enumerate_linear_statistics(a, depth=1, threads=1):
    """Values of ``sum_i a[i, s_i - 1]`` for all ``n!`` permutations ``s``.

    Parameters
    ----------
    a : (n, n) int64 array
        Score matrix.
    depth : int
        Length of the fixed prefix defining a work unit (0 = one unit).
    threads : int
        Number of worker threads.

    Returns
    -------
    (n!,) int64 array, in unit order (not sorted).
    """
    a = np.ascontiguousarray(a, dtype=np.int64)
    units = work_units(a.shape[0], depth)
    if threads <= 1 or len(units) == 1:
        parts = [_run_unit(a, u) for u in units]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda u: _run_unit(a, u), units))
    return np.concatenate(parts)


def permutation_table(n):
    """All permutations of 1..n in lexicographic order, shape ``(n!, n)``."""
    table = np.zeros((1, 0), dtype=np.int8)
    for k in range(1, n + 1):
        blocks = []
        for first in range(k):
            rest = table + (table >= first)
            blocks.append(np.hstack([np.full((rest.shape[0], 1), first, dtype=np.int8), rest]))
        table = np.vstack(blocks).astype(np.int8)
    return table.astype(np.int64) + 1


def table_linear_statistics(a):
    """Recompute the linear statistic for every permutation (lexicographic order)."""
    a = np.asarray(a, dtype=np.int64)
    n = a.shape[0]
    table = permutation_table(n)
    total = np.zeros(table.shape[0], dtype=np.int64)
    for i in range(n):
        total += a[i, table[:, i] - 1]
    return total
