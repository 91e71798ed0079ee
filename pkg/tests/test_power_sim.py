import math

import numpy as np
import pytest

from wrcorr import errors
from wrcorr.copulas import Family
from wrcorr.power_sim import (
    REFERENCE_STATISTICS,
    REFERENCE_THETAS,
    CriticalSource,
    PowerStudyConfig,
    resolve_critical_value,
    resolve_critical_values,
    run_power_study,
)
from wrcorr.rank_core import KENDALL, SPEARMAN, Tail, WrcVariant

SL5 = WrcVariant(Tail.LOWER, 5, True)
SU5 = WrcVariant(Tail.UPPER, 5, True)


def _se(rate, reps):
    return math.sqrt(max(rate * (1 - rate), 1e-12) / reps)


@pytest.fixture(scope="module")
def desk_reports():
    return {fam: run_power_study(PowerStudyConfig(fam, REFERENCE_THETAS[fam], seed=0))
            for fam in (Family.CLAYTON, Family.GUMBEL, Family.GAUSSIAN)}


class TestCriticalValues:
    def test_spearman_exact(self):
        assert resolve_critical_value(SPEARMAN, 5, 0.10, "exact") == pytest.approx(1.565 / math.sqrt(5), abs=5e-4)

    def test_spearman_asymptotic(self):
        for n in (30, 50, 400):
            assert resolve_critical_value(SPEARMAN, n, 0.05, "asymptotic") * math.sqrt(n) == \
                pytest.approx(1.645, abs=5e-4)

    def test_kendall_asymptotic_uses_exact_variance(self):
        n = 50
        c = resolve_critical_value(KENDALL, n, 0.05, "asymptotic")
        assert c == pytest.approx(1.6448536 * math.sqrt((4 * n + 10) / (9 * n * (n - 1))), rel=1e-7)

    def test_mc_close_to_normal(self):
        v = WrcVariant(Tail.LOWER, 3, True)
        mc = resolve_critical_value(v, 50, 0.05, "mc", null_reps=200_000, null_seed=0)
        assert abs(mc - resolve_critical_value(v, 50, 0.05, "normal")) < 0.01

    def test_shared_null_matches_single(self):
        many = resolve_critical_values([SL5, KENDALL], 30, 0.05, "mc", 20_000, 3)
        assert many[1] == resolve_critical_value(KENDALL, 30, 0.05, "mc", 20_000, 3)

    def test_insufficient_null_reps(self):
        with pytest.raises(errors.InsufficientNullRepsError):
            resolve_critical_value(SPEARMAN, 50, 0.05, "mc", null_reps=1999)

    def test_cap(self):
        with pytest.raises(errors.CapExceededError):
            resolve_critical_value(SPEARMAN, 50, 0.05, "exact")

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            resolve_critical_value(SPEARMAN, 50, 1.0, "asymptotic")


class TestConfig:
    def test_defaults(self):
        c = PowerStudyConfig("clayton", [0.5])
        assert c.n == 50 and c.reps == 5000 and c.alpha == 0.05
        assert c.critical_source is CriticalSource.MC and c.null_reps == 200_000
        assert c.null_seed == c.seed

    def test_parses_statistics(self):
        c = PowerStudyConfig("gumbel", [1.5], statistics=["sym-lower:3", "kendall"])
        assert c.statistics == (WrcVariant(Tail.LOWER, 3, True), KENDALL)

    def test_validation(self):
        with pytest.raises(errors.InsufficientRepsError):
            PowerStudyConfig("clayton", [0.5], reps=999)
        with pytest.raises(errors.ParameterOutOfDomainError):
            PowerStudyConfig("gumbel", [0.5])
        with pytest.raises(ValueError):
            PowerStudyConfig("clayton", [0.5], alpha=0.0)


class TestLevelControl:
    @pytest.mark.parametrize("source", ["mc", "asymptotic"])
    @pytest.mark.parametrize("family", [Family.CLAYTON, Family.GUMBEL, Family.GAUSSIAN, Family.FRANK])
    def test_independence_rate(self, family, source):
        rep = run_power_study(PowerStudyConfig(family, [family.independence_parameter], seed=7,
                                               critical_source=source))
        bound = 4 * math.sqrt(0.05 * 0.95 / 5000)
        for c in rep.cells:
            assert abs(c.rejection_rate - 0.05) <= bound, c


class TestQualitativeClaims:
    def test_clayton_favours_lower(self, desk_reports):
        rep = desk_reports[Family.CLAYTON]
        checked = 0
        for t in rep.thetas():
            lo, up = rep.rate(t, SL5), rep.rate(t, SU5)
            if 0.1 < lo < 0.95 and 0.1 < up < 0.95:
                assert lo > up, t
                checked += 1
        assert checked >= 2

    def test_gumbel_favours_upper(self, desk_reports):
        rep = desk_reports[Family.GUMBEL]
        checked = 0
        for t in rep.thetas():
            lo, up = rep.rate(t, SL5), rep.rate(t, SU5)
            if 0.1 < lo < 0.95 and 0.1 < up < 0.95:
                assert up > lo, t
                checked += 1
        assert checked >= 2

    @pytest.mark.xfail(strict=True, reason="the printed Gaussian table itself shows gaps of 0.05 "
                                           "between statistics, far beyond 4 binomial SE")
    def test_gaussian_all_statistics_equal(self, desk_reports):
        rep = desk_reports[Family.GAUSSIAN]
        for t in rep.thetas():
            rates = [c.rejection_rate for c in rep.cells if c.theta == t]
            q = max(rates)
            if 0.1 < q < 0.95:
                assert max(rates) - min(rates) <= 4 * _se(q, 5000), t

    @pytest.mark.parametrize("family", [Family.CLAYTON, Family.GUMBEL, Family.GAUSSIAN])
    def test_monotone_in_theta(self, desk_reports, family):
        rep = desk_reports[family]
        for stat in rep.statistics():
            rates = [rep.rate(t, stat) for t in rep.thetas()]
            for a, b in zip(rates, rates[1:]):
                assert b >= a - 2 * math.sqrt(_se(a, 5000) ** 2 + _se(b, 5000) ** 2), stat


class TestReport:
    def test_reproducible(self):
        cfg = dict(family="frank", thetas=[0.0, 2.0], reps=1000, null_reps=5000, seed=3)
        a = run_power_study(PowerStudyConfig(**cfg))
        b = run_power_study(PowerStudyConfig(**cfg, threads=3))
        assert a.to_json() == b.to_json()
        assert a.to_csv() == b.to_csv()
        c = run_power_study(PowerStudyConfig(**{**cfg, "seed": 4}))
        assert c.to_csv() != a.to_csv()

    def test_cells(self):
        rep = run_power_study(PowerStudyConfig("clayton", [0.0, 1.0], reps=1000, null_reps=5000, seed=1))
        assert len(rep.cells) == 2 * len(REFERENCE_STATISTICS)
        for c in rep.cells:
            assert 0.0 <= c.rejection_rate <= 1.0
            assert c.binomial_se == pytest.approx(math.sqrt(c.rejection_rate * (1 - c.rejection_rate) / 1000))
        assert rep.cells[0].rho_s == 0.0
        md = rep.metadata
        assert md["critical_source"] == "mc" and md["null_reps"] == 5000 and md["seed"] == 1
        assert set(md["critical_values"]) == set(rep.statistics())

    def test_wide_layout(self):
        rep = run_power_study(PowerStudyConfig("gaussian", [0.0, 0.5], reps=1000, null_reps=5000,
                                               statistics=[SL5, SPEARMAN]))
        lines = rep.to_wide_csv().strip().splitlines()
        assert lines[0] == "theta,rho_s,sym-lower:5,spearman"
        assert len(lines) == 3

    def test_normal_source_metadata(self):
        rep = run_power_study(PowerStudyConfig("gumbel", [1.2], reps=1000, critical_source="normal",
                                               statistics=[SU5]))
        assert rep.metadata["critical_source"] == "normal" and rep.metadata["null_reps"] is None
        assert np.isfinite(rep.metadata["critical_values"]["sym-upper:5"])
