"""Bivariate copula families: CDF, conditional derivative, sampling, tail dependence.

Families and parameter domains
------------------------------
===============  =====================  ======================================
family           parameter              independence / comonotone boundary
===============  =====================  ======================================
independence     (none)                 always independent
clayton          theta >= 0             theta = 0 is the independence limit
gumbel           theta >= 1             theta = 1
frank            any real theta         theta = 0 is the independence limit
gaussian         -1 < rho < 1           rho = 0
cuadras-auge     0 <= theta <= 1        0 -> independence, 1 -> M
raftery          0 <= theta <= 1        0 -> independence, 1 -> M
===============  =====================  ======================================

All evaluations are vectorized over ``u`` and ``v`` and written in forms
that stay accurate near the independence boundary (needed for slopes at
``theta -> 0``) and near the corners of the unit square.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri, owens_t

from .errors import ParameterOutOfDomainError

__all__ = ["Family", "parse_family", "CopulaModel", "cdf", "conditional_derivative", "sample", "tail_dependence",
           "parse_copula"]

SAMPLE_CHUNK = 1 << 16
BISECTION_TOL = 1e-10


class Family(str, enum.Enum):
    INDEPENDENCE = "independence"
    CLAYTON = "clayton"
    GUMBEL = "gumbel"
    FRANK = "frank"
    GAUSSIAN = "gaussian"
    CUADRAS_AUGE = "cuadras-auge"
    RAFTERY = "raftery"

    @property
    def independence_parameter(self) -> float:
        return 1.0 if self is Family.GUMBEL else 0.0

    @property
    def lower_bounded(self) -> bool:
        """True if the independence parameter sits on the edge of the domain."""
        return self in (Family.CLAYTON, Family.GUMBEL, Family.CUADRAS_AUGE, Family.RAFTERY)


_ALIASES = {"normal": Family.GAUSSIAN, "cuadras_auge": Family.CUADRAS_AUGE,
            "cuadrasauge": Family.CUADRAS_AUGE, "ca": Family.CUADRAS_AUGE,
            "indep": Family.INDEPENDENCE, "pi": Family.INDEPENDENCE}


def parse_family(name) -> Family:
    """Family from its name or a common alias (``normal``, ``ca``, ...)."""
    if isinstance(name, Family):
        return name
    key = str(name).strip().lower()
    return _ALIASES.get(key) or Family(key)


@dataclass(frozen=True)
class CopulaModel:
    """An immutable (family, parameter) pair."""

    family: Family
    theta: float = 0.0

    def __post_init__(self):
        fam = parse_family(self.family)
        object.__setattr__(self, "family", fam)
        t = float(self.theta)
        object.__setattr__(self, "theta", t)
        ok = {
            Family.INDEPENDENCE: True,
            Family.CLAYTON: t >= 0.0,
            Family.GUMBEL: t >= 1.0,
            Family.FRANK: math.isfinite(t),
            Family.GAUSSIAN: -1.0 < t < 1.0,
            Family.CUADRAS_AUGE: 0.0 <= t <= 1.0,
            Family.RAFTERY: 0.0 <= t <= 1.0,
        }[fam]
        if not ok or math.isnan(t):
            raise ParameterOutOfDomainError(f"parameter {t} outside the domain of the {fam.value} family")

    @property
    def is_independence(self) -> bool:
        return self.family is Family.INDEPENDENCE or self.theta == self.family.independence_parameter

    @property
    def is_comonotone(self) -> bool:
        return self.family in (Family.CUADRAS_AUGE, Family.RAFTERY) and self.theta == 1.0

    def __str__(self) -> str:
        if self.family is Family.INDEPENDENCE:
            return "independence"
        return f"{self.family.value}:{self.theta:g}"

    @classmethod
    def parse(cls, text: str) -> "CopulaModel":
        return parse_copula(text)

    def cdf(self, u, v):
        return cdf(self, u, v)

    def conditional_derivative(self, u, v):
        return conditional_derivative(self, u, v)

    def sample(self, n: int, seed=None):
        return sample(self, n, seed)

    def tail_dependence(self):
        return tail_dependence(self)


def parse_copula(text: str) -> CopulaModel:
    """Parse a ``family:parameter`` string such as ``clayton:0.75``."""
    name, sep, par = str(text).strip().partition(":")
    fam = parse_family(name)
    if fam is Family.INDEPENDENCE:
        return CopulaModel(fam)
    if not sep:
        raise ValueError(f"copula string {text!r} needs a parameter (family:parameter)")
    return CopulaModel(fam, float(par))


def _uv(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((u < 0) | (u > 1)) or np.any((v < 0) | (v > 1)):
        raise ValueError("copula arguments must lie in [0, 1]")
    u, v = np.broadcast_arrays(np.atleast_1d(u), np.atleast_1d(v))
    return u, v


def _shaped(out, shape):
    out = np.asarray(out, dtype=float).reshape(shape)
    return out[()] if out.ndim == 0 else out


def _log_clayton_sum(x, y):
    """``log(exp(x) + exp(y) - 1)`` for ``x, y >= 0``, accurate when both are tiny."""
    m = np.maximum(x, y)
    lo = np.minimum(x, y)
    with np.errstate(over="ignore", invalid="ignore"):
        small = np.log1p(np.expm1(x) + np.expm1(y))
        large = m + np.log1p(np.exp(lo - m) - np.exp(-m))
    return np.where(m < 1.0, small, large)


def _clayton_cdf(t, u, v):
    with np.errstate(divide="ignore"):
        x = -t * np.log(u)
        y = -t * np.log(v)
    out = np.zeros(u.shape)
    ok = (u > 0) & (v > 0)
    out[ok] = np.exp(-_log_clayton_sum(x[ok], y[ok]) / t)
    return out


def _gumbel_cdf(t, u, v):
    with np.errstate(divide="ignore"):
        a = (-np.log(u)) ** t + (-np.log(v)) ** t
        return np.exp(-a ** (1.0 / t))


def _frank_cdf(t, u, v):
    return -np.log1p(np.expm1(-t * u) * np.expm1(-t * v) / np.expm1(-t)) / t


def _bvn_cdf(h, k, rho):
    """Standard bivariate normal CDF via Owen's T function."""
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    r = math.sqrt(1.0 - rho * rho)
    out = np.empty(np.broadcast(h, k).shape)
    h, k = np.broadcast_arrays(h, k)
    hz = h == 0
    kz = k == 0
    both = hz & kz
    out[both] = 0.25 + math.asin(rho) / (2 * math.pi)
    only_h = hz & ~kz
    out[only_h] = 0.5 * ndtr(k[only_h]) - owens_t(k[only_h], -rho / r)
    only_k = kz & ~hz
    out[only_k] = 0.5 * ndtr(h[only_k]) - owens_t(h[only_k], -rho / r)
    gen = ~hz & ~kz
    hh, kk = h[gen], k[gen]
    ah = (kk - rho * hh) / (hh * r)
    ak = (hh - rho * kk) / (kk * r)
    beta = np.where(hh * kk < 0, 0.5, 0.0)
    out[gen] = 0.5 * (ndtr(hh) + ndtr(kk)) - owens_t(hh, ah) - owens_t(kk, ak) - beta
    return out


def _gaussian_cdf(rho, u, v):
    out = np.zeros(u.shape)
    inner = (u > 0) & (u < 1) & (v > 0) & (v < 1)
    out[inner] = _bvn_cdf(ndtri(u[inner]), ndtri(v[inner]), rho)
    edge = ~inner
    # on the boundary C(u, 0) = 0, C(u, 1) = u
    out[edge] = np.where((u[edge] == 0) | (v[edge] == 0), 0.0, np.minimum(u[edge], v[edge]))
    return np.clip(out, np.maximum(u + v - 1, 0), np.minimum(u, v))


def _cuadras_auge_cdf(t, u, v):
    return np.minimum(u, v) ** t * (u * v) ** (1.0 - t)


def _raftery_parts(t):
    a = 1.0 / (1.0 - t)
    return a, t / (1.0 - t)


def _raftery_cdf(t, u, v):
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    a, c = _raftery_parts(t)
    k = (1.0 - t) / (1.0 + t)
    with np.errstate(divide="ignore", invalid="ignore"):
        # (uv)^a (1 - max^-b) = lo^a hi^a - lo^a hi^(-c)
        term = lo ** a * (hi ** a - np.exp(-c * np.log(hi)))
    term = np.where(lo > 0, term, 0.0)
    return lo + k * term


def cdf(model: CopulaModel, u, v):
    """Copula ``C(u, v)``."""
    shape = np.broadcast(np.asarray(u), np.asarray(v)).shape
    u, v = _uv(u, v)
    fam, t = model.family, model.theta
    if model.is_independence:
        out = u * v
    elif model.is_comonotone:
        out = np.minimum(u, v)
    elif fam is Family.CLAYTON:
        out = _clayton_cdf(t, u, v)
    elif fam is Family.GUMBEL:
        out = _gumbel_cdf(t, u, v)
    elif fam is Family.FRANK:
        out = _frank_cdf(t, u, v)
    elif fam is Family.GAUSSIAN:
        out = _gaussian_cdf(t, u, v)
    elif fam is Family.CUADRAS_AUGE:
        out = _cuadras_auge_cdf(t, u, v)
    else:
        out = _raftery_cdf(t, u, v)
    return _shaped(out, shape)


def conditional_derivative(model: CopulaModel, u, v):
    """``dC/du (u, v)``: the conditional CDF of V given U = u.

    Right-continuous in ``v`` where the family has a singular component on
    the diagonal (Cuadras-Auge).
    """
    shape = np.broadcast(np.asarray(u), np.asarray(v)).shape
    u, v = _uv(u, v)
    fam, t = model.family, model.theta
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if model.is_independence:
            out = v * 1.0
        elif model.is_comonotone:
            out = (v >= u).astype(float)
        elif fam is Family.CLAYTON:
            c = _clayton_cdf(t, u, v)
            out = (c / u) ** (1.0 + t)
        elif fam is Family.GUMBEL:
            lu, lv = -np.log(u), -np.log(v)
            s = lu ** t + lv ** t
            out = _gumbel_cdf(t, u, v) * lu ** (t - 1.0) / u * s ** (1.0 / t - 1.0)
            out = np.where(v >= 1.0, 1.0, np.where(v <= 0.0, 0.0, out))
        elif fam is Family.FRANK:
            eu = np.expm1(-t * u) + 1.0
            ev = np.expm1(-t * v)
            out = eu * ev / (np.expm1(-t) + np.expm1(-t * u) * ev)
        elif fam is Family.GAUSSIAN:
            r = math.sqrt(1.0 - t * t)
            out = ndtr((ndtri(v) - t * ndtri(u)) / r)
        elif fam is Family.CUADRAS_AUGE:
            out = np.where(v < u, (1.0 - t) * u ** (-t) * v, v ** (1.0 - t))
        else:
            a, c = _raftery_parts(t)
            below = (v / u) ** a * (u ** (2 * a - 1) + t) / (1.0 + t)
            above = 1.0 + (u ** (a - 1) * v ** a - (u / v) ** c) / (1.0 + t)
            out = np.where(v < u, below, above)
            out = np.where(v <= 0.0, 0.0, out)
    return _shaped(np.clip(out, 0.0, 1.0), shape)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _positive_stable(alpha, size, rng):
    """Positive stable variates with Laplace transform ``exp(-s**alpha)`` (Kanter / CMS)."""
    w = rng.uniform(0.0, math.pi, size)
    e = rng.standard_exponential(size)
    return (np.sin(alpha * w) / np.sin(w) ** (1.0 / alpha)
            * (np.sin((1.0 - alpha) * w) / e) ** ((1.0 - alpha) / alpha))


def _invert_conditional(model, u, w):
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    while np.max(hi - lo) > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        below = conditional_derivative(model, u, mid) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _sample_with_rng(model: CopulaModel, n: int, rng) -> np.ndarray:
    fam, t = model.family, model.theta
    if model.is_independence:
        return rng.random((n, 2))
    if model.is_comonotone:
        u = rng.random(n)
        return np.column_stack([u, u])
    if fam is Family.CLAYTON:
        u, w = rng.random(n), rng.random(n)
        # v = (u^-t (w^(-t/(1+t)) - 1) + 1)^(-1/t), evaluated in logs
        g = np.log(np.expm1(-t / (1.0 + t) * np.log(w))) - t * np.log(u)
        v = np.exp(-np.logaddexp(g, 0.0) / t)
        return np.column_stack([u, v])
    if fam is Family.FRANK:
        u, w = rng.random(n), rng.random(n)
        v = -np.log1p(w * np.expm1(-t) / (w + (1.0 - w) * np.exp(-t * u))) / t
        return np.column_stack([u, v])
    if fam is Family.GUMBEL:
        alpha = 1.0 / t
        s = _positive_stable(alpha, n, rng)
        e = rng.standard_exponential((n, 2))
        return np.exp(-(e / s[:, None]) ** alpha)
    if fam is Family.GAUSSIAN:
        z = rng.standard_normal((n, 2))
        z2 = t * z[:, 0] + math.sqrt(1.0 - t * t) * z[:, 1]
        return np.column_stack([ndtr(z[:, 0]), ndtr(z2)])
    if fam is Family.CUADRAS_AUGE:
        r = rng.random((n, 3))
        common = r[:, 2] ** (1.0 / t)
        u = np.maximum(r[:, 0] ** (1.0 / (1.0 - t)), common)
        v = np.maximum(r[:, 1] ** (1.0 / (1.0 - t)), common)
        return np.column_stack([u, v])
    u, w = rng.random(n), rng.random(n)
    return np.column_stack([u, _invert_conditional(model, u, w)])


def sample(model: CopulaModel, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` i.i.d. pairs ``(u, v)`` from the copula; returns shape ``(n, 2)``.

    Draws are produced in fixed-size chunks, chunk ``k`` using the stream
    seeded by ``(seed, k)``, so the output depends only on ``seed``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(seed, (np.random.Generator, np.random.SeedSequence)):
        return _sample_with_rng(model, n, _rng(seed))
    base = 0 if seed is None else int(seed)
    parts = []
    for k, start in enumerate(range(0, n, SAMPLE_CHUNK)):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([base, k])))
        parts.append(_sample_with_rng(model, min(SAMPLE_CHUNK, n - start), rng))
    return np.vstack(parts)


def tail_dependence(model: CopulaModel):
    """``(lambda_L, lambda_U)`` tail-dependence coefficients."""
    fam, t = model.family, model.theta
    if model.is_independence:
        return 0.0, 0.0
    if fam is Family.CLAYTON:
        return 2.0 ** (-1.0 / t), 0.0
    if fam is Family.GUMBEL:
        return 0.0, 2.0 - 2.0 ** (1.0 / t)
    if fam is Family.CUADRAS_AUGE:
        return 0.0, t
    if fam is Family.RAFTERY:
        return 2.0 * t / (t + 1.0), 0.0
    return 0.0, 0.0
