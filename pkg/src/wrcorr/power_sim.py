"""Monte Carlo power of one-sided independence tests under copula alternatives.

Each (family, theta) cell draws ``reps`` samples of size ``n`` from the
copula, evaluates every statistic on the same samples, and rejects when a
statistic exceeds its upper critical value at level ``alpha``.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtri

from . import __version__
from .copulas import CopulaModel, Family, _sample_with_rng, parse_family
from .errors import InsufficientNullRepsError, InsufficientRepsError
from .null_dist import (
    DEFAULT_CAP,
    asymptotic_quantile,
    exact_null,
    kendall_null_sd,
    mc_null_many,
    null_moments,
    quantile,
)
from .population import population_nu
from .rank_core import (
    KENDALL,
    SPEARMAN,
    Statistic,
    Tail,
    WrcVariant,
    parse_statistic,
    ranks_from_samples,
    statistic_batch,
    statistic_label,
)

__all__ = ["CriticalSource", "PowerStudyConfig", "PowerCell", "PowerReport", "run_power_study",
           "resolve_critical_value", "resolve_critical_values", "REFERENCE_THETAS",
           "REFERENCE_STATISTICS", "kendall_null_sd"]

MIN_REPS = 1000

# theta grids of the reference power tables (frank: no reference table, grid chosen here)
REFERENCE_THETAS = {
    Family.CLAYTON: (0.0, 0.05, 0.11, 0.2, 0.35, 0.75, 1.8, 3.2, 5.6, 30.0),
    Family.GUMBEL: (1.0, 1.03, 1.07, 1.15, 1.25, 1.4, 1.7, 2.2, 3.0, 4.5),
    Family.GAUSSIAN: (0.0, 0.04, 0.07, 0.12, 0.2, 0.3, 0.4, 0.55, 0.75, 0.95),
    Family.FRANK: (0.0, 0.25, 0.4, 0.7, 1.2, 1.8, 2.5, 3.5, 5.5, 12.0),
}

REFERENCE_STATISTICS = tuple(
    [WrcVariant(Tail.LOWER, p, True) for p in (5, 4, 3, 2)]
    + [WrcVariant(Tail.UPPER, p, True) for p in (5, 4, 3, 2)]
    + [SPEARMAN, KENDALL]
)


class CriticalSource(str, enum.Enum):
    EXACT = "exact"
    MC = "mc"
    ASYMPTOTIC = "asymptotic"
    NORMAL = "normal"


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def resolve_critical_values(stats: Sequence[Statistic], n: int, alpha: float,
                            source="mc", null_reps: int = 200_000, null_seed: int = 0,
                            cap: int = DEFAULT_CAP, threads: int = 1) -> list:
    """Upper critical values (raw scale) of several statistics at level ``alpha``.

    ``mc`` draws one set of ``null_reps`` permutations shared by all
    statistics; ``exact`` enumerates (``n <= cap``); ``asymptotic`` uses the
    normal limit, with the exact null variance for Kendall's tau; ``normal``
    uses ``z_(1-alpha)`` times the exact finite-``n`` null standard deviation
    of every statistic.
    """
    _check_alpha(alpha)
    source = CriticalSource(source)
    r = 1.0 - alpha
    if source is CriticalSource.ASYMPTOTIC:
        out = []
        for s in stats:
            if s == KENDALL:
                out.append(float(ndtri(r)) * kendall_null_sd(n))
            else:
                out.append(asymptotic_quantile(s, r) / math.sqrt(n))
        return out
    if source is CriticalSource.NORMAL:
        z = float(ndtri(r))
        return [z * (kendall_null_sd(n) if s == KENDALL else math.sqrt(null_moments(s, n, cap)[1]))
                for s in stats]
    if source is CriticalSource.EXACT:
        return [quantile(exact_null(s, n, cap=cap, threads=threads), r) for s in stats]
    if null_reps < 100.0 / alpha:
        raise InsufficientNullRepsError(
            f"null_reps={null_reps} is below 100/alpha = {math.ceil(100 / alpha)}")
    dists = mc_null_many(list(stats), n, null_reps, null_seed, threads=threads)
    return [quantile(d, r) for d in dists]


def resolve_critical_value(stat: Statistic, n: int, alpha: float, source="mc",
                           null_reps: int = 200_000, null_seed: int = 0,
                           cap: int = DEFAULT_CAP, threads: int = 1) -> float:
    """Upper critical value of one statistic; see :func:`resolve_critical_values`."""
    return resolve_critical_values([stat], n, alpha, source, null_reps, null_seed, cap, threads)[0]


@dataclass
class PowerStudyConfig:
    family: Family
    thetas: Sequence[float]
    n: int = 50
    reps: int = 5000
    alpha: float = 0.05
    statistics: Sequence[Statistic] = REFERENCE_STATISTICS
    critical_source: CriticalSource = CriticalSource.MC
    null_reps: int = 200_000
    null_seed: Optional[int] = None
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        self.family = parse_family(self.family)
        self.critical_source = CriticalSource(self.critical_source)
        self.statistics = tuple(parse_statistic(s) if isinstance(s, str) else s
                                for s in self.statistics)
        self.thetas = tuple(float(t) for t in self.thetas)
        _check_alpha(self.alpha)
        if self.reps < MIN_REPS:
            raise InsufficientRepsError(f"reps must be >= {MIN_REPS}, got {self.reps}")
        if self.n < 3:
            raise ValueError("n must be >= 3")
        for t in self.thetas:
            CopulaModel(self.family, t)
        if self.null_seed is None:
            self.null_seed = self.seed

    def models(self):
        return [CopulaModel(self.family, t) for t in self.thetas]


@dataclass(frozen=True)
class PowerCell:
    family: str
    theta: float
    rho_s: float
    statistic: str
    rejection_rate: float
    binomial_se: float
    reps: int


@dataclass
class PowerReport:
    cells: list
    metadata: dict = field(default_factory=dict)

    CSV_FIELDS = ("family", "theta", "rho_s", "statistic", "rejection_rate", "binomial_se", "reps")

    def rate(self, theta: float, statistic) -> float:
        label = statistic if isinstance(statistic, str) else statistic_label(statistic)
        for c in self.cells:
            if c.theta == theta and c.statistic == label:
                return c.rejection_rate
        raise KeyError((theta, label))

    def statistics(self) -> list:
        seen = []
        for c in self.cells:
            if c.statistic not in seen:
                seen.append(c.statistic)
        return seen

    def thetas(self) -> list:
        seen = []
        for c in self.cells:
            if c.theta not in seen:
                seen.append(c.theta)
        return seen

    def to_csv(self, digits: int = 9) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        for c in self.cells:
            w.writerow([c.family, f"{c.theta:.{digits}g}", f"{c.rho_s:.{digits}g}", c.statistic,
                        f"{c.rejection_rate:.{digits}g}", f"{c.binomial_se:.{digits}g}", c.reps])
        return buf.getvalue()

    def to_wide_csv(self, digits: int = 3) -> str:
        """One row per theta: ``theta, rho_s`` then one column per statistic."""
        stats = self.statistics()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta", "rho_s"] + stats)
        for t in self.thetas():
            row = [c for c in self.cells if c.theta == t]
            rates = {c.statistic: c.rejection_rate for c in row}
            w.writerow([f"{t:.{digits}f}", f"{row[0].rho_s:.{digits}f}"]
                       + [f"{rates[s]:.{digits}f}" for s in stats])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"metadata": self.metadata, "cells": [asdict(c) for c in self.cells]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _cell_rates(config: PowerStudyConfig, index: int, model: CopulaModel, crits) -> np.ndarray:
    family_code = list(Family).index(config.family)
    ss = np.random.SeedSequence([int(config.seed), family_code, index])
    rng = np.random.Generator(np.random.PCG64(ss))
    uv = _sample_with_rng(model, config.reps * config.n, rng).reshape(config.reps, config.n, 2)
    perms = ranks_from_samples(uv[:, :, 0], uv[:, :, 1])
    rates = np.empty(len(config.statistics))
    for k, (stat, crit) in enumerate(zip(config.statistics, crits)):
        rates[k] = np.count_nonzero(statistic_batch(stat, perms) > crit) / config.reps
    return rates


def run_power_study(config: PowerStudyConfig) -> PowerReport:
    """Estimate rejection rates for every (theta, statistic) cell of ``config``."""
    crits = resolve_critical_values(config.statistics, config.n, config.alpha,
                                    config.critical_source, config.null_reps, config.null_seed,
                                    threads=config.threads)
    models = config.models()
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            rates = list(pool.map(lambda im: _cell_rates(config, im[0], im[1], crits),
                                  enumerate(models)))
    else:
        rates = [_cell_rates(config, i, m, crits) for i, m in enumerate(models)]
    cells = []
    for model, row in zip(models, rates):
        rho = population_nu(SPEARMAN, model, "quadrature").value
        for stat, r in zip(config.statistics, row):
            cells.append(PowerCell(config.family.value, model.theta, rho, statistic_label(stat),
                                   float(r), math.sqrt(r * (1 - r) / config.reps), config.reps))
    labels = [statistic_label(s) for s in config.statistics]
    metadata = {
        "family": config.family.value,
        "n": config.n,
        "reps": config.reps,
        "alpha": config.alpha,
        "seed": config.seed,
        "critical_source": config.critical_source.value,
        "null_reps": config.null_reps if config.critical_source is CriticalSource.MC else None,
        "null_seed": config.null_seed if config.critical_source is CriticalSource.MC else None,
        "critical_values": dict(zip(labels, crits)),
        "version": __version__,
    }
    return PowerReport(cells, metadata)
