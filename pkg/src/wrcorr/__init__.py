"""Weighted rank correlation: statistics, null distributions, copula models,
Pitman efficiencies and power simulation."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .rank_core import (  # noqa: E402
    KENDALL,
    SPEARMAN,
    RankPairing,
    Tail,
    WrcVariant,
    empirical_copula,
    empirical_nu,
    kendall,
    parse_statistic,
    prepare_pairing,
    spearman,
    weighted_nu_generic,
    wrc,
    wrc_exact,
)
from .null_dist import (  # noqa: E402
    NullDistribution,
    asymptotic_quantile,
    asymptotic_sd,
    exact_null,
    independence_test,
    mc_null,
    null_moments,
    quantile,
)
from .copulas import CopulaModel, Family, parse_copula  # noqa: E402
from .population import PopulationCoefficient, population_nu  # noqa: E402
from .efficiency import AreResult, are_closed_form, are_numeric, are_table  # noqa: E402
from .power_sim import (  # noqa: E402
    PowerReport,
    PowerStudyConfig,
    resolve_critical_value,
    run_power_study,
)
