"""Null distributions of the rank statistics under independence.

Under independence every permutation of the Y ranks is equally likely,
so the exact null distribution is the multiset of statistic values over
all ``n!`` permutations, each with mass ``1/n!``.  Beyond the enumeration
cap the distribution is approximated by Monte Carlo draws of uniform
random permutations.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Optional

import numpy as np
from scipy.special import ndtri, ndtr

from . import __version__
from ._enumerate import enumerate_linear_statistics, table_linear_statistics
from .errors import (
    CapExceededError,
    DegenerateSizeError,
    EmptyDistributionError,
    InsufficientRepsError,
    ROutOfRangeError,
    UnsupportedCombinationError,
)
from .rank_core import (
    KENDALL,
    Statistic,
    Tail,
    WrcVariant,
    kappa,
    linear_form,
    parse_statistic,
    prepare_pairing,
    score_matrix,
    statistic_batch,
    statistic_label,
    wrc,
)

DEFAULT_CAP = 10
HARD_CAP = 11
MC_CHUNK = 16384
MIN_MC_REPS = 1000


class NullKind(str, enum.Enum):
    EXACT = "exact"
    MONTE_CARLO = "mc"


class TestMethod(str, enum.Enum):
    EXACT = "exact"
    MONTE_CARLO = "mc"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True, eq=False)
class NullDistribution:
    """Sorted statistic values under independence, each with mass ``1/len(values)``."""

    statistic: Statistic
    n: int
    kind: NullKind
    values: np.ndarray
    normalized: bool = False
    seed: Optional[int] = None

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def atom(self) -> float:
        return 1.0 / self.size

    def mean(self) -> float:
        return float(np.mean(self.values))

    def variance(self) -> float:
        return float(np.mean((self.values - self.values.mean()) ** 2))

    def quantile(self, r: float) -> float:
        return quantile(self, r)

    def cdf_table(self):
        """Distinct values with the cumulative probability at each."""
        vals, counts = np.unique(self.values, return_counts=True)
        return vals, np.cumsum(counts) / self.size

    def to_csv(self, path_or_buf) -> None:
        vals, cum = self.cdf_table()
        lines = ["value,cumulative_probability"]
        lines += [f"{v!r},{c!r}" for v, c in zip(vals.tolist(), cum.tolist())]
        text = "\n".join(lines) + "\n"
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", encoding="utf-8") as fh:
                fh.write(text)

    def metadata(self) -> dict:
        return {
            "statistic": statistic_label(self.statistic) if self.statistic == KENDALL else str(self.statistic),
            "n": self.n,
            "kind": self.kind.value,
            "reps": self.size if self.kind is NullKind.MONTE_CARLO else None,
            "seed": self.seed,
            "normalized": self.normalized,
            "version": __version__,
        }

    def save(self, path) -> None:
        """Binary cache file (compressed ``.npz``)."""
        with open(path, "wb") as fh:
            np.savez_compressed(fh, values=self.values, metadata=np.array(json.dumps(self.metadata())))

    @classmethod
    def load(cls, path) -> "NullDistribution":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["metadata"]))
            values = data["values"]
        stat = KENDALL if meta["statistic"] == "kendall" else WrcVariant.parse(meta["statistic"])
        return cls(stat, meta["n"], NullKind(meta["kind"]), values, meta["normalized"], meta["seed"])


def read_null_csv(path_or_buf):
    """Parse a CSV written by :meth:`NullDistribution.to_csv`."""
    if hasattr(path_or_buf, "read"):
        text = path_or_buf.read()
    else:
        with open(path_or_buf, encoding="utf-8") as fh:
            text = fh.read()
    rows = text.strip().splitlines()
    if rows[0] != "value,cumulative_probability":
        raise ValueError("unexpected header in null distribution CSV")
    data = np.array([[float(c) for c in row.split(",")] for row in rows[1:]])
    return data[:, 0], data[:, 1]


def cache_key(statistic: Statistic, n: int, kind: NullKind, normalized: bool,
              reps: Optional[int] = None, seed: Optional[int] = None) -> str:
    label = "kendall" if statistic == KENDALL else str(statistic)
    raw = f"{label}|{n}|{NullKind(kind).value}|{int(normalized)}|{reps}|{seed}|{__version__}"
    return hashlib.sha256(raw.encode()).hexdigest()[:24]


def _check_n(n: int) -> None:
    if n < 2:
        raise DegenerateSizeError(f"need n >= 2, got n={n}")


def _kendall_exact_values(n: int) -> np.ndarray:
    # inversion counts of a uniform permutation: Mahonian numbers
    counts = [1]
    for k in range(2, n + 1):
        new = [0] * (len(counts) + k - 1)
        for i, c in enumerate(counts):
            for j in range(k):
                new[i + j] += c
        counts = new
    inv = np.repeat(np.arange(len(counts)), counts)
    return (n * (n - 1) - 4 * inv) / (n * (n - 1))


def exact_linear_statistics(variant: WrcVariant, n: int, threads: int = 1,
                            depth: int = 1, debug: bool = False) -> np.ndarray:
    """Unsorted linear statistic over all permutations (see :mod:`wrcorr._enumerate`)."""
    a = score_matrix(variant, n, dtype=np.int64)
    total = enumerate_linear_statistics(a, depth=depth, threads=threads)
    if debug:
        check = table_linear_statistics(a)
        if not np.array_equal(np.sort(total), np.sort(check)):
            raise AssertionError("incremental enumeration disagrees with full recomputation")
    return total


def exact_null(variant: Statistic, n: int, normalized: bool = False, cap: int = DEFAULT_CAP,
               threads: int = 1, depth: int = 1, debug: bool = False) -> NullDistribution:
    """Exact null distribution by enumerating all ``n!`` permutations.

    ``cap`` may be raised to 11 (about 40M permutations; expect tens of
    seconds and ~0.6 GB of memory).
    """
    _check_n(n)
    cap = min(cap, HARD_CAP)
    if n > cap:
        raise CapExceededError(n, cap)
    if n == HARD_CAP:
        warnings.warn("exact enumeration at n=11 covers 39,916,800 permutations", RuntimeWarning)
    if variant == KENDALL:
        values = _kendall_exact_values(n)
    else:
        form = linear_form(variant, n)
        total = exact_linear_statistics(variant, n, threads=threads, depth=depth, debug=debug)
        values = (form.offset + form.scale * total).astype(np.float64) / float(form.denominator)
    if normalized:
        values = values * math.sqrt(n)
    values.sort()
    return NullDistribution(variant, n, NullKind.EXACT, values, normalized)


def mc_permutations(n: int, reps: int, seed: int, threads: int = 1):
    """Yield chunks of uniform random permutations of 1..n (rows), reproducibly.

    Chunk ``k`` draws from its own stream seeded by ``(seed, k)``, so the
    output does not depend on ``threads``.
    """
    starts = list(range(0, reps, MC_CHUNK))

    def draw(k):
        size = min(MC_CHUNK, reps - starts[k])
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), k])))
        base = np.tile(np.arange(1, n + 1, dtype=np.int64), (size, 1))
        return rng.permuted(base, axis=1, out=base)

    if threads <= 1:
        for k in range(len(starts)):
            yield draw(k)
    else:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            yield from pool.map(draw, range(len(starts)))


def mc_null_many(stats, n: int, reps: int, seed: int, normalized: bool = False,
                 threads: int = 1) -> list:
    """Monte Carlo null distributions of several statistics on shared permutations."""
    _check_n(n)
    if reps < MIN_MC_REPS:
        raise InsufficientRepsError(f"Monte Carlo null needs reps >= {MIN_MC_REPS}, got {reps}")
    parts = [[] for _ in stats]
    for chunk in mc_permutations(n, reps, seed, threads):
        for k, stat in enumerate(stats):
            parts[k].append(statistic_batch(stat, chunk))
    out = []
    for stat, p in zip(stats, parts):
        values = np.concatenate(p)
        if normalized:
            values = values * math.sqrt(n)
        values.sort()
        out.append(NullDistribution(stat, n, NullKind.MONTE_CARLO, values, normalized, seed))
    return out


def mc_null(variant: Statistic, n: int, reps: int, seed: int, normalized: bool = False,
            threads: int = 1) -> NullDistribution:
    """Monte Carlo null distribution from ``reps`` uniform random permutations."""
    return mc_null_many([variant], n, reps, seed, normalized, threads)[0]


# var(sqrt(n) * nu) for the symmetrized variants, as rational functions of n
_SYM_NORMALIZED_VARIANCE = {
    (Tail.LOWER, 2): lambda n: Fraction(n * (31 * n**2 + 60 * n + 26), 30 * (n + 1)**2 * (n - 1)),
    (Tail.UPPER, 2): lambda n: Fraction(n * (31 * n**2 - 60 * n + 26), 30 * (n - 1)**3),
    (Tail.LOWER, 3): lambda n: Fraction(621 * n**5 + 1995 * n**4 + 1902 * n**3 + 420 * n**2 - 44 * n,
                                        7 * (3 * n + 1)**2 * (3 * n + 4)**2 * (n - 1)),
    (Tail.UPPER, 3): lambda n: Fraction(621 * n**5 - 1995 * n**4 + 1902 * n**3 - 420 * n**2 - 44 * n,
                                        7 * (3 * n - 4)**2 * (3 * n - 1)**2 * (n - 1)),
    (Tail.LOWER, 4): lambda n: Fraction(
        n * (112 * n**6 + 486 * n**5 + 658 * n**4 + 162 * n**3 - 195 * n**2 - 24 * n + 34),
        6 * (4 * n**2 + 5 * n - 1)**2 * (n - 1) * (n + 1)**2),
    (Tail.UPPER, 4): lambda n: Fraction(
        n * (112 * n**6 - 486 * n**5 + 658 * n**4 - 162 * n**3 - 195 * n**2 + 24 * n + 34),
        6 * (4 * n**2 - 5 * n - 1)**2 * (n - 1)**3),
    (Tail.LOWER, 5): lambda n: Fraction(
        n * (4100 * n**8 + 22176 * n**7 + 38244 * n**6 + 10164 * n**5 - 27789 * n**4
             - 7623 * n**3 + 15298 * n**2 + 924 * n - 2676),
        33 * (n - 1) * (10 * n**4 + 28 * n**3 + 17 * n**2 - 7 * n - 4)**2),
    (Tail.UPPER, 5): lambda n: Fraction(
        n * (4100 * n**8 - 22176 * n**7 + 38244 * n**6 - 10164 * n**5 - 27789 * n**4
             + 7623 * n**3 + 15298 * n**2 - 924 * n - 2676),
        33 * (n - 1) * (10 * n**4 - 28 * n**3 + 17 * n**2 + 7 * n - 4)**2),
}


def null_variance_exact(variant: WrcVariant, n: int, cap: int = DEFAULT_CAP) -> Fraction:
    """Exact null variance of the raw statistic as a rational number."""
    _check_n(n)
    p = variant.p
    if p == 1:
        return Fraction(1, n - 1)
    form = linear_form(variant, n)
    if not variant.symmetrized:
        if variant.tail is Tail.LOWER:
            sa, sa2 = kappa(n, p), kappa(n, 2 * p)
        else:
            sa, sa2 = kappa(n - 1, p), kappa(n - 1, 2 * p)
        # var(sum a_i b_{S_i}) = [sum a^2 - (sum a)^2/n][sum b^2 - (sum b)^2/n] / (n - 1), b_j = j
        spread_a = Fraction(sa2) - Fraction(sa * sa, n)
        spread_b = Fraction(n * (n * n - 1), 12)
        var_linear = spread_a * spread_b / (n - 1)
        return form.scale ** 2 * var_linear / form.denominator ** 2
    if p <= 5:
        return _SYM_NORMALIZED_VARIANCE[(variant.tail, p)](n) / n
    if n <= min(cap, HARD_CAP):
        total = exact_linear_statistics(variant, n)
        # exact second central moment from integer sums
        s1 = int(total.sum(dtype=object))
        s2 = int((total.astype(object) ** 2).sum())
        count = total.size
        var_linear = Fraction(s2, count) - Fraction(s1, count) ** 2
        return form.scale ** 2 * var_linear / form.denominator ** 2
    raise UnsupportedCombinationError(
        f"no closed-form null variance for {variant} and n={n} exceeds the enumeration cap {cap}")


def null_moments(variant: WrcVariant, n: int, cap: int = DEFAULT_CAP):
    """Null ``(mean, variance)`` of the raw statistic; the mean is always zero."""
    return 0.0, float(null_variance_exact(variant, n, cap))


def asymptotic_variance_exact(variant: WrcVariant) -> Fraction:
    """Limiting null variance of ``sqrt(n) * nu`` as a rational."""
    p = variant.p
    if variant.symmetrized:
        return Fraction(p * p + 10 * p + 7, 6 * (2 * p + 1))
    return Fraction((p + 2) ** 2, 3 * (2 * p + 1))


def asymptotic_sd(variant: WrcVariant) -> float:
    """Limiting null standard deviation of ``sqrt(n) * nu``."""
    p = variant.p
    if variant.symmetrized:
        return math.sqrt((p * p + 10 * p + 7) / (6 * (2 * p + 1)))
    return (p + 2) / math.sqrt(3 * (2 * p + 1))


def kendall_null_sd(n: int) -> float:
    """Exact null standard deviation of Kendall's tau."""
    return math.sqrt((4 * n + 10) / (9 * n * (n - 1)))


def _check_r(r: float) -> None:
    if not 0.0 < r < 1.0:
        raise ROutOfRangeError(f"r must lie in (0, 1), got {r}")


def quantile(dist: NullDistribution, r: float) -> float:
    """Quantile by the midpoint-at-jumps rule.

    With ``N`` stored values: if ``N r`` is an integer ``j`` the result is
    the midpoint of the ``j``-th and ``(j+1)``-th order statistics,
    otherwise the ``(floor(N r) + 1)``-th order statistic.
    """
    _check_r(r)
    x = dist.values
    size = x.size
    if size == 0:
        raise EmptyDistributionError("empty null distribution")
    nr = Fraction(r).limit_denominator(10 ** 12) * size
    j = math.floor(nr)
    hi = min(j + 1, size)
    if nr == j:
        lo = max(j, 1)
        return 0.5 * (float(x[lo - 1]) + float(x[hi - 1]))
    return float(x[hi - 1])


def asymptotic_quantile(variant: WrcVariant, r: float) -> float:
    """Normal-approximation quantile of ``sqrt(n) * nu``."""
    _check_r(r)
    return float(ndtri(r)) * asymptotic_sd(variant)


@dataclass(frozen=True)
class TestReport:
    """One-sided (greater) test of independence."""

    __test__ = False  # not a pytest class

    statistic: float
    normalized: float
    critical_value: float
    p_value: float
    method: TestMethod
    alpha: float
    variant: Statistic
    n: int
    null_size: Optional[int] = None

    @property
    def reject(self) -> bool:
        return self.p_value < self.alpha

    def as_dict(self) -> dict:
        return {
            "statistic_name": statistic_label(self.variant),
            "n": self.n,
            "statistic": self.statistic,
            "normalized": self.normalized,
            "critical_value": self.critical_value,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "method": self.method.value,
            "reject": self.reject,
        }


def _upper_tail_counts(sorted_values: np.ndarray, x) -> np.ndarray:
    return sorted_values.size - np.searchsorted(sorted_values, x, side="left")


def _consistent_critical_value(sorted_values: np.ndarray, pvalue_of_count, alpha: float) -> float:
    """Largest null value ``c`` whose upper-tail p-value is still >= alpha.

    With this choice ``stat > c`` holds exactly when ``p(stat) < alpha``.
    """
    support = np.unique(sorted_values)
    p = pvalue_of_count(_upper_tail_counts(sorted_values, support))
    keep = support[p >= alpha]
    return float(keep[-1]) if keep.size else -math.inf


def independence_test(x, y, variant: Statistic, method="exact", alpha: float = 0.05,
                      reps: int = 100_000, seed: int = 0, cap: int = DEFAULT_CAP) -> TestReport:
    """Test independence against positive quadrant dependence (reject for large values).

    ``variant`` may also be a label such as ``"sym-upper:3"`` or ``"kendall"``.
    """
    variant = parse_statistic(variant)
    method = TestMethod(method)
    pairing = prepare_pairing(x, y)
    n = pairing.n
    if variant == KENDALL:
        obs = float(statistic_batch(KENDALL, np.asarray([pairing.s]))[0])
    else:
        obs = wrc(variant, pairing)
    if method is TestMethod.ASYMPTOTIC:
        if variant == KENDALL:
            sd = kendall_null_sd(n)
        else:
            sd = asymptotic_sd(variant) / math.sqrt(n)
        p = float(ndtr(-obs / sd))
        crit = float(ndtri(1 - alpha)) * sd
        return TestReport(obs, obs * math.sqrt(n), crit, p, method, alpha, variant, n)
    if method is TestMethod.EXACT:
        dist = exact_null(variant, n, cap=cap)
        size = dist.size

        def pv(count):
            return count / size
    else:
        dist = mc_null(variant, n, reps, seed)
        size = dist.size

        def pv(count):
            return (1 + count) / (size + 1)
    p = float(pv(_upper_tail_counts(dist.values, obs)))
    crit = _consistent_critical_value(dist.values, pv, alpha)
    return TestReport(obs, obs * math.sqrt(n), crit, p, method, alpha, variant, n, size)


def cached_null(variant: Statistic, n: int, kind="exact", normalized: bool = False,
                reps: Optional[int] = None, seed: Optional[int] = None,
                cache_dir: Optional[str] = None, **kwargs) -> NullDistribution:
    """Build a null distribution, reusing a binary cache file when present."""
    kind = NullKind(kind)
    path = None
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        key = cache_key(variant, n, kind, normalized, reps, seed)
        path = os.path.join(cache_dir, f"null-{key}.npz")
        if os.path.exists(path):
            return NullDistribution.load(path)
    if kind is NullKind.EXACT:
        dist = exact_null(variant, n, normalized, **kwargs)
    else:
        dist = mc_null(variant, n, reps, seed, normalized, **kwargs)
    if path:
        dist.save(path)
    return dist
