"""Pitman asymptotic relative efficiency of the weighted tests versus Spearman.

For a one-parameter family with independence at ``theta0`` the Pitman ARE
of the test based on ``nu`` relative to the Spearman test is::

    ARE = [(mu_nu'(theta0) / mu_rho'(theta0)) * (sigma_rho / sigma_nu)]^2

where ``mu`` is the population coefficient as a function of ``theta`` and
``sigma`` the limiting null standard deviation of ``sqrt(n) * statistic``
(``sigma_rho = 1``).
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Optional

from .copulas import CopulaModel, Family, parse_family
from .errors import SlopeUnstableError, UnsupportedFamilyError
from .null_dist import asymptotic_sd
from .population import population_nu
from .rank_core import SPEARMAN, Tail, WrcVariant

__all__ = ["AreMethod", "AreResult", "are_closed_form", "are_numeric", "are_table",
           "are_table_csv", "KENDALL_VS_SPEARMAN", "ARE_COLUMNS"]

# ARE of Kendall's tau relative to Spearman's rho: a known constant, not computed.
KENDALL_VS_SPEARMAN = 1.0

DEFAULT_STEP = 1e-3
RICHARDSON_TOL = 1e-3


class AreMethod(str, enum.Enum):
    CLOSED_FORM = "closed-form"
    NUMERIC_SLOPE = "numeric-slope"


@dataclass(frozen=True)
class AreResult:
    """ARE of ``variant`` relative to Spearman's rho under ``family``."""

    variant: WrcVariant
    family: Family
    value: float
    method: AreMethod
    slope_step: Optional[float] = None
    reference: str = "spearman"


def are_closed_form(variant: WrcVariant, family=Family.CUADRAS_AUGE) -> AreResult:
    """Closed-form ARE for the Cuadras-Auge family."""
    family = parse_family(family)
    if family is not Family.CUADRAS_AUGE:
        raise UnsupportedFamilyError(f"closed-form ARE is available for cuadras-auge only, not {family.value}")
    p = variant.p
    q = p * p + 10 * p + 7
    if variant.tail is Tail.LOWER and not variant.symmetrized:
        value = 4 * (p + 5) ** 2 * (2 * p + 1) / (3 * (p + 2) ** 2 * (p + 3) ** 2)
    elif variant.tail is Tail.UPPER and not variant.symmetrized:
        value = 16 * (2 * p + 1) / (3 * (p + 3) ** 2)
    elif variant.tail is Tail.LOWER:
        value = 8 * (p + 5) ** 2 * (2 * p + 1) / (3 * (p + 3) ** 2 * q)
    else:
        value = 32 * (p + 2) ** 2 * (2 * p + 1) / (3 * (p + 3) ** 2 * q)
    if p == 1:
        value = 1.0
    return AreResult(variant, family, value, AreMethod.CLOSED_FORM)


def _slope(variant: WrcVariant, family: Family, theta0: float, h: float) -> float:
    def mu(t):
        return population_nu(variant, CopulaModel(family, t), "quadrature").value

    if family.lower_bounded:
        # second-order forward difference
        return (-3.0 * mu(theta0) + 4.0 * mu(theta0 + h) - mu(theta0 + 2 * h)) / (2 * h)
    return (mu(theta0 + h) - mu(theta0 - h)) / (2 * h)


def _are_at(variant, family, theta0, h) -> float:
    ratio = _slope(variant, family, theta0, h) / _slope(SPEARMAN, family, theta0, h)
    return (ratio / asymptotic_sd(variant)) ** 2


def are_numeric(variant: WrcVariant, family, theta0: Optional[float] = None,
                step: float = DEFAULT_STEP) -> AreResult:
    """ARE from finite-difference slopes of quadrature population coefficients.

    Uses a forward difference when ``theta0`` is on the edge of the
    parameter domain and a central difference otherwise.  The result at
    ``step`` is compared with the one at ``step / 2``.

    Raises
    ------
    SlopeUnstableError
        If halving the step moves the ARE by ``1e-3`` or more.
    """
    family = parse_family(family)
    if family is Family.INDEPENDENCE:
        raise UnsupportedFamilyError("the independence copula has no parameter")
    if theta0 is None:
        theta0 = family.independence_parameter
    if variant.p == 1:
        return AreResult(variant, family, 1.0, AreMethod.NUMERIC_SLOPE, step)
    value = _are_at(variant, family, theta0, step)
    check = _are_at(variant, family, theta0, step / 2)
    if not abs(value - check) < RICHARDSON_TOL:
        raise SlopeUnstableError(
            f"ARE for {variant} moved by {abs(value - check):.2e} when halving step {step}")
    return AreResult(variant, family, value, AreMethod.NUMERIC_SLOPE, step)


ARE_COLUMNS = (
    ("cuadras_auge_lower", Tail.LOWER, False),
    ("cuadras_auge_upper", Tail.UPPER, False),
    ("cuadras_auge_sym_lower", Tail.LOWER, True),
    ("cuadras_auge_sym_upper", Tail.UPPER, True),
    ("clayton_lower", Tail.LOWER, False),
    ("clayton_upper", Tail.UPPER, False),
    ("clayton_sym_lower", Tail.LOWER, True),
    ("clayton_sym_upper", Tail.UPPER, True),
)


def are_table(p_max: int = 13, step: float = DEFAULT_STEP):
    """Rows ``{"p": p, <column>: ARE, ...}`` for ``p = 1..p_max``.

    Cuadras-Auge columns use the closed forms, Clayton columns the numeric
    slope method.
    """
    rows = []
    for p in range(1, p_max + 1):
        row = {"p": p}
        for name, tail, sym in ARE_COLUMNS:
            variant = WrcVariant(tail, p, sym)
            if name.startswith("cuadras_auge"):
                row[name] = are_closed_form(variant).value
            else:
                row[name] = are_numeric(variant, Family.CLAYTON, step=step).value
        rows.append(row)
    return rows


def are_table_csv(rows, digits: int = 9) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["p"] + [c[0] for c in ARE_COLUMNS])
    for row in rows:
        writer.writerow([row["p"]] + [f"{row[c[0]]:.{digits}g}" for c in ARE_COLUMNS])
    return buf.getvalue()
