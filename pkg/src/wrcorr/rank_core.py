"""Sample rank statistics: the weighted rank correlation family and friends.

Every statistic here is a function of a single permutation ``s`` of
``{1, ..., n}``: the ranks of the Y sample listed in increasing order of
the X sample.  The weighted rank correlation (WRC) statistics are affine
functions of a linear rank statistic

    L(s) = sum_i a(i, s_i),

so each variant is fully described by an integer score matrix ``a`` and
three integers (offset, scale, denominator) with

    nu(s) = (offset + scale * L(s)) / denominator.

The scalar entry points evaluate ``L`` with Python integers and divide
once, so results are exact up to the final (correctly rounded) division.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import (
    DegenerateSizeError,
    LengthMismatchError,
    NonPositiveWeightError,
    TiesPresentError,
    UnsupportedCombinationError,
)

__all__ = [
    "Tail",
    "WrcVariant",
    "RankPairing",
    "SPEARMAN",
    "KENDALL",
    "LinearForm",
    "prepare_pairing",
    "kappa",
    "weighted_nu_generic",
    "wrc",
    "spearman",
    "kendall",
    "empirical_nu",
    "empirical_copula",
    "linear_form",
    "score_matrix",
    "ranks_from_samples",
    "statistic_batch",
    "parse_statistic",
    "statistic_label",
]


class Tail(str, enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class WrcVariant:
    """One member of the WRC family.

    ``Tail.LOWER`` weights agreement on the top ranks (small rank numbers),
    ``Tail.UPPER`` on the bottom ranks.  ``p`` is the integer weight
    exponent; ``p == 1`` gives Spearman's rho for every tail and
    symmetrization.
    """

    tail: Tail = Tail.LOWER
    p: int = 1
    symmetrized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "tail", Tail(self.tail))
        if isinstance(self.p, bool) or int(self.p) != self.p or self.p < 1:
            raise ValueError(f"weight exponent p must be a positive integer, got {self.p!r}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "symmetrized", bool(self.symmetrized))

    @property
    def label(self) -> str:
        return ("sym-" if self.symmetrized else "") + self.tail.value

    def __str__(self) -> str:
        return f"{self.label}:{self.p}"

    @classmethod
    def parse(cls, text: str) -> "WrcVariant":
        """Parse ``"lower:2"``, ``"sym-upper:5"`` or ``"spearman"``."""
        text = text.strip().lower()
        if text in ("spearman", "rho"):
            return cls(Tail.LOWER, 1, False)
        name, _, p = text.partition(":")
        sym = name.startswith("sym-")
        tail = name[4:] if sym else name
        if tail not in ("lower", "upper"):
            raise ValueError(f"unknown WRC variant {text!r}")
        return cls(Tail(tail), int(p) if p else 1, sym)


SPEARMAN = WrcVariant(Tail.LOWER, 1, False)
KENDALL = "kendall"

Statistic = Union[WrcVariant, str]


def parse_statistic(text) -> Statistic:
    """Map a label to a statistic: a :class:`WrcVariant` or ``KENDALL``."""
    if isinstance(text, WrcVariant):
        return text
    if str(text).strip().lower() in ("kendall", "tau"):
        return KENDALL
    return WrcVariant.parse(str(text))


def statistic_label(stat: Statistic) -> str:
    if stat == KENDALL:
        return "kendall"
    if stat.p == 1:
        return "spearman"
    return str(stat)


@dataclass(frozen=True)
class RankPairing:
    """Y-ranks listed in increasing X-rank order (a permutation of 1..n)."""

    s: tuple

    def __post_init__(self):
        s = tuple(int(v) for v in self.s)
        if sorted(s) != list(range(1, len(s) + 1)):
            raise ValueError("s must be a permutation of 1..n")
        object.__setattr__(self, "s", s)

    @property
    def n(self) -> int:
        return len(self.s)

    def inverse(self) -> "RankPairing":
        """The pairing with the roles of X and Y swapped."""
        inv = [0] * self.n
        for i, v in enumerate(self.s, start=1):
            inv[v - 1] = i
        return RankPairing(tuple(inv))

    def flipped(self) -> "RankPairing":
        """Apply ``S_i -> n + 1 - S_i`` (reverse the Y ranking)."""
        return RankPairing(tuple(self.n + 1 - v for v in self.s))

    @classmethod
    def identity(cls, n: int) -> "RankPairing":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def reversal(cls, n: int) -> "RankPairing":
        return cls(tuple(range(n, 0, -1)))


PairingLike = Union[RankPairing, Sequence[int], np.ndarray]


def _as_pairing(pairing: PairingLike) -> RankPairing:
    if isinstance(pairing, RankPairing):
        return pairing
    return RankPairing(tuple(pairing))


def _check_size(pairing: RankPairing) -> None:
    if pairing.n < 2:
        raise DegenerateSizeError(f"need n >= 2 for a correlation, got n={pairing.n}")


def _tied_values(a: np.ndarray) -> list:
    vals, counts = np.unique(a, return_counts=True)
    return vals[counts > 1].tolist()


def prepare_pairing(x, y) -> RankPairing:
    """Turn two samples into a :class:`RankPairing`.

    Ties are rejected: the statistics assume continuous marginals and
    midranks would invalidate the exact null tables.

    >>> prepare_pairing([0.3, 0.1, 0.2], [1.0, 5.0, 2.0]).s
    (3, 2, 1)
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise LengthMismatchError(f"x and y must be 1-D of equal length, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise DegenerateSizeError(f"need n >= 2 for a correlation, got n={x.size}")
    for name, col in (("x", x), ("y", y)):
        tied = _tied_values(col)
        if tied:
            raise TiesPresentError(name, tied)
    order = np.argsort(x, kind="stable")
    y_rank = np.empty(y.size, dtype=np.int64)
    y_rank[np.argsort(y, kind="stable")] = np.arange(1, y.size + 1)
    return RankPairing(tuple(y_rank[order].tolist()))


def kappa(n: int, p: int) -> int:
    """Power sum ``1**p + 2**p + ... + n**p`` as an exact integer."""
    if n < 0 or p < 0:
        raise ValueError("kappa needs n >= 0 and p >= 0")
    return _kappa(int(n), int(p))


@lru_cache(maxsize=4096)
def _kappa(n: int, p: int) -> int:
    return sum(i ** p for i in range(1, n + 1))


@dataclass(frozen=True)
class LinearForm:
    """``nu = (offset + scale * L) / denominator`` with ``L = sum_i a(i, S_i)``."""

    variant: WrcVariant
    n: int
    offset: int
    scale: int
    denominator: int

    def score(self, i: int, j: int) -> int:
        """Score ``a(i, j)`` for 1-based position ``i`` and rank ``j``."""
        n, p = self.n, self.variant.p
        if self.variant.tail is Tail.LOWER:
            a = j * (n + 1 - i) ** p
            if self.variant.symmetrized:
                a += i * (n + 1 - j) ** p
        else:
            a = j * (i - 1) ** p
            if self.variant.symmetrized:
                a += i * (j - 1) ** p
        return a

    def value(self, linear_statistic) -> float:
        return (self.offset + self.scale * linear_statistic) / self.denominator

    def exact_value(self, linear_statistic: int) -> Fraction:
        return Fraction(self.offset + self.scale * linear_statistic, self.denominator)


@lru_cache(maxsize=1024)
def linear_form(variant: WrcVariant, n: int) -> LinearForm:
    p = variant.p
    if variant.tail is Tail.LOWER:
        offset = (n + 1) * kappa(n, p)
        denominator = 2 * kappa(n, p + 1) - (n + 1) * kappa(n, p)
        scale = -1 if variant.symmetrized else -2
    else:
        offset = -(n + 1) * kappa(n - 1, p)
        denominator = 2 * kappa(n - 1, p + 1) - (n - 1) * kappa(n - 1, p)
        scale = 1 if variant.symmetrized else 2
    return LinearForm(variant, n, offset, scale, denominator)


def score_matrix(variant: WrcVariant, n: int, dtype=object) -> np.ndarray:
    """Score matrix ``a[i-1, j-1] = a(i, j)`` of the variant's linear statistic."""
    form = linear_form(variant, n)
    a = np.empty((n, n), dtype=object)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            a[i - 1, j - 1] = form.score(i, j)
    if dtype is object:
        return a
    if np.dtype(dtype) == np.int64 and np.abs(a).max() * n >= 2 ** 62:
        raise OverflowError(f"scores of {variant} at n={n} do not fit in int64 sums")
    return a.astype(dtype)


def _linear_statistic(form: LinearForm, s: tuple) -> int:
    return sum(form.score(i, v) for i, v in enumerate(s, start=1))


def wrc(variant: WrcVariant, pairing: PairingLike) -> float:
    """Weighted rank correlation of the given variant.

    Equals 1 at the identity pairing and -1 at the reversal.
    """
    pairing = _as_pairing(pairing)
    _check_size(pairing)
    form = linear_form(variant, pairing.n)
    return form.value(_linear_statistic(form, pairing.s))


def wrc_exact(variant: WrcVariant, pairing: PairingLike) -> Fraction:
    """:func:`wrc` as an exact rational."""
    pairing = _as_pairing(pairing)
    _check_size(pairing)
    form = linear_form(variant, pairing.n)
    return form.exact_value(_linear_statistic(form, pairing.s))


def spearman(pairing: PairingLike) -> float:
    """Spearman's rho from the ``12 sum(i S_i) / (n^3 - n)`` form."""
    pairing = _as_pairing(pairing)
    _check_size(pairing)
    n = pairing.n
    t = sum(i * v for i, v in enumerate(pairing.s, start=1))
    return (12 * t - 3 * n * (n + 1) ** 2) / (n ** 3 - n)


def _count_inversions(seq: list) -> int:
    # bottom-up merge sort
    a = list(seq)
    n = len(a)
    inv = 0
    width = 1
    buf = [0] * n
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[i] <= a[j]:
                    buf[k] = a[i]
                    i += 1
                else:
                    buf[k] = a[j]
                    inv += mid - i
                    j += 1
                k += 1
            buf[k:k + mid - i] = a[i:mid]
            k += mid - i
            buf[k:k + hi - j] = a[j:hi]
        a, buf = buf, a
        width *= 2
    return inv


def kendall(pairing: PairingLike) -> float:
    """Kendall's tau, ``(concordant - discordant) / (n (n - 1) / 2)``."""
    pairing = _as_pairing(pairing)
    _check_size(pairing)
    n = pairing.n
    inv = _count_inversions(list(pairing.s))
    return (n * (n - 1) - 4 * inv) / (n * (n - 1))


def weighted_nu_generic(weights, pairing: PairingLike) -> float:
    """WRC with arbitrary positive weights on the partial sums.

    ``eta_k = sum_{i<=k} (S_i - i)`` is nonnegative for every permutation
    and simultaneously maximal at the reversal, where ``eta_k = k (n - k)``.
    """
    pairing = _as_pairing(pairing)
    _check_size(pairing)
    w = np.asarray(weights, dtype=float)
    n = pairing.n
    if w.shape != (n,):
        raise LengthMismatchError(f"expected {n} weights, got shape {w.shape}")
    if np.any(~(w > 0)):
        raise NonPositiveWeightError("all weights must be positive")
    s = np.asarray(pairing.s, dtype=np.int64)
    k = np.arange(1, n + 1, dtype=np.int64)
    eta = np.cumsum(s - k)
    eta_max = k * (n - k)
    num = math.fsum(w * eta)
    den = math.fsum(w * eta_max)
    return 1.0 - 2.0 * num / den


def empirical_nu(variant: WrcVariant, pairing: PairingLike) -> float:
    """Plug-in estimate of the population coefficient from the empirical copula.

    Only the non-symmetrized variants have an empirical form.  The
    computation is exact in rational arithmetic up to the final rounding.
    """
    if variant.symmetrized:
        raise UnsupportedCombinationError("empirical_nu is defined for non-symmetrized variants only")
    pairing = _as_pairing(pairing)
    _check_size(pairing)
    return float(empirical_nu_exact(variant, pairing))


def empirical_nu_exact(variant: WrcVariant, pairing: PairingLike) -> Fraction:
    pairing = _as_pairing(pairing)
    n, p = pairing.n, variant.p
    m = n + 1
    if variant.tail is Tail.LOWER:
        t = sum((m - i) ** p * (m - v) for i, v in enumerate(pairing.s, start=1))
        shift = Fraction(p + 2, p)
    else:
        t = sum((m ** p - i ** p) * (m - v) for i, v in enumerate(pairing.s, start=1))
        shift = Fraction(p + 2)
    return Fraction(2 * (p + 1) * (p + 2) * t, n * p * m ** (p + 1)) - shift


def empirical_copula(pairing: PairingLike, u, v):
    """Empirical copula ``C_n(u, v)`` on pseudo-observations ``(i, S_i) / (n + 1)``."""
    pairing = _as_pairing(pairing)
    n = pairing.n
    pu = np.arange(1, n + 1) / (n + 1)
    pv = np.asarray(pairing.s) / (n + 1)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    hits = (pu <= u[..., None]) & (pv <= v[..., None])
    return hits.sum(axis=-1) / n


def ranks_from_samples(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row-wise pairing for batches of samples.

    ``x`` and ``y`` have shape ``(m, n)``; returns an ``(m, n)`` int array
    whose rows are the Y-ranks in increasing X order.  Ties (probability
    zero for continuous data) are broken by position.
    """
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    order = np.argsort(x, axis=1, kind="stable")
    y_sorted = np.take_along_axis(y, order, axis=1)
    rank = np.empty_like(order)
    idx = np.argsort(y_sorted, axis=1, kind="stable")
    np.put_along_axis(rank, idx, np.arange(1, x.shape[1] + 1)[None, :].repeat(x.shape[0], 0), axis=1)
    return rank


def _batch_linear(variant: WrcVariant, perms: np.ndarray):
    n = perms.shape[1]
    form = linear_form(variant, n)
    a = score_matrix(variant, n)
    exact = np.abs(a).max() * n < 2 ** 53 and abs(form.offset) < 2 ** 53
    a = a.astype(np.int64 if exact else np.float64)
    total = a[np.arange(n)[None, :], perms - 1].sum(axis=1)
    return form, total


def _kendall_batch(perms: np.ndarray) -> np.ndarray:
    m, n = perms.shape
    inv = np.zeros(m, dtype=np.int64)
    for i in range(n - 1):
        inv += (perms[:, i + 1:] < perms[:, i:i + 1]).sum(axis=1)
    return (n * (n - 1) - 4 * inv) / (n * (n - 1))


def statistic_batch(stat: Statistic, perms: np.ndarray) -> np.ndarray:
    """Evaluate a statistic on each row of an ``(m, n)`` array of 1-based permutations.

    Integer accumulation is used whenever the linear statistic fits in
    53 bits (always for the simulation sizes used here); results then agree
    with :func:`wrc` to the last bit.
    """
    perms = np.asarray(perms)
    if perms.ndim != 2 or perms.shape[1] < 2:
        raise DegenerateSizeError("need an (m, n) permutation array with n >= 2")
    if stat == KENDALL:
        return _kendall_batch(perms)
    form, total = _batch_linear(stat, perms)
    num = form.offset + form.scale * total
    return num.astype(np.float64) / float(form.denominator)
