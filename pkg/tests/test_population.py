import numpy as np
import pytest

from wrcorr import errors
from wrcorr.copulas import CopulaModel, Family
from wrcorr.population import (
    CURVE_PS,
    CURVE_THETAS,
    coefficient_curves,
    cuadras_auge_closed_form,
    lower_aqd_mc,
    population_nu,
    population_nu_many,
    square_rule,
)
from wrcorr.rank_core import SPEARMAN, Tail, WrcVariant

THETAS = [round(0.1 * k, 1) for k in range(1, 10)]


def lower(p, sym=False):
    return WrcVariant(Tail.LOWER, p, sym)


def upper(p, sym=False):
    return WrcVariant(Tail.UPPER, p, sym)


class TestQuadratureRule:
    def test_weights_and_polynomials(self):
        u, v, w = square_rule()
        assert w.sum() == pytest.approx(1.0, abs=1e-13)
        assert np.dot(w, u ** 3 * v ** 2) == pytest.approx(1 / 12, abs=1e-13)

    def test_kinked_integrand(self):
        u, v, w = square_rule()
        assert np.dot(w, np.minimum(u, v)) == pytest.approx(1 / 3, abs=1e-13)


class TestClosedForm:
    @pytest.mark.parametrize("p", range(1, 11))
    def test_against_quadrature(self, p):
        for theta in THETAS:
            m = CopulaModel(Family.CUADRAS_AUGE, theta)
            for v in (lower(p), upper(p)):
                closed = population_nu(v, m, "closed-form").value
                quad = population_nu(v, m, "quadrature")
                assert abs(closed - quad.value) <= 1e-6, (v, theta)
                assert quad.error_estimate < 1e-6

    def test_examples(self):
        m = CopulaModel(Family.CUADRAS_AUGE, 0.5)
        assert population_nu(lower(2), m, "closed-form").value == pytest.approx(0.412698, abs=1e-6)
        assert population_nu(upper(2), m, "closed-form").value == pytest.approx(0.444444, abs=1e-6)

    @pytest.mark.parametrize("theta", [0.0, 0.3, 0.7, 1.0])
    def test_reduces_to_spearman(self, theta):
        expected = 3 * theta / (4 - theta)
        assert cuadras_auge_closed_form(lower(1), theta) == pytest.approx(expected, abs=1e-14)
        assert cuadras_auge_closed_form(upper(1), theta) == pytest.approx(expected, abs=1e-14)

    @pytest.mark.parametrize("p", range(1, 11))
    def test_boundaries(self, p):
        for v in (lower(p), upper(p)):
            assert cuadras_auge_closed_form(v, 0.0) == 0.0
            assert cuadras_auge_closed_form(v, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_unavailable(self):
        with pytest.raises(errors.MethodUnavailableError):
            population_nu(lower(2, True), CopulaModel(Family.CUADRAS_AUGE, 0.5), "closed-form")
        with pytest.raises(errors.MethodUnavailableError):
            population_nu(lower(2), CopulaModel(Family.CLAYTON, 1.0), "closed-form")

    def test_domain(self):
        with pytest.raises(errors.ParameterOutOfDomainError):
            cuadras_auge_closed_form(lower(2), 1.5)


class TestQuadrature:
    @pytest.mark.parametrize("variant", [lower(3), upper(2), lower(4, True), upper(5, True), SPEARMAN])
    @pytest.mark.parametrize("family", [Family.INDEPENDENCE, Family.CLAYTON, Family.GUMBEL,
                                        Family.GAUSSIAN, Family.FRANK])
    def test_independence_is_zero(self, variant, family):
        m = CopulaModel(family, family.independence_parameter)
        assert abs(population_nu(variant, m).value) <= 1e-7

    def test_comonotone_is_one(self):
        for fam in (Family.CUADRAS_AUGE, Family.RAFTERY):
            m = CopulaModel(fam, 1.0)
            for v in (lower(3), upper(3), lower(3, True), upper(3, True)):
                assert population_nu(v, m).value == pytest.approx(1.0, abs=1e-7)

    def test_known_spearman(self):
        # Gaussian: rho_s = 6/pi asin(r/2); Frank/Clayton values checked by Monte Carlo below
        r = 0.5
        m = CopulaModel(Family.GAUSSIAN, r)
        assert population_nu(SPEARMAN, m).value == pytest.approx(6 / np.pi * np.arcsin(r / 2), abs=1e-7)

    @pytest.mark.parametrize("model", [CopulaModel(Family.CLAYTON, 1.5), CopulaModel(Family.GUMBEL, 1.6),
                                       CopulaModel(Family.FRANK, 3.0), CopulaModel(Family.RAFTERY, 0.4)],
                             ids=str)
    def test_against_monte_carlo(self, model):
        variants = [lower(3), upper(3), lower(2, True), upper(4, True)]
        mc = population_nu_many(variants, model, "mc", reps=400_000, seed=2)
        for v, est in zip(variants, mc):
            q = population_nu(v, model).value
            assert abs(est.value - q) <= est.error_estimate, v
            assert -1.0 <= q <= 1.0

    def test_monte_carlo_seeded(self):
        m = CopulaModel(Family.CLAYTON, 1.0)
        a = population_nu(lower(2), m, "mc", reps=5000, seed=4)
        b = population_nu(lower(2), m, "mc", reps=5000, seed=4)
        assert a.value == b.value and a.method.value == "mc"


class TestOrderings:
    GRID = [round(0.05 * k, 2) for k in range(21)]

    @pytest.mark.parametrize("family", [Family.CUADRAS_AUGE, Family.RAFTERY])
    @pytest.mark.parametrize("variant", [lower(2), upper(2), lower(5), upper(5), lower(3, True),
                                         upper(3, True)])
    def test_monotone_in_theta(self, family, variant):
        vals = [population_nu(variant, CopulaModel(family, t)).value for t in self.GRID]
        assert np.all(np.diff(vals) >= -1e-9)

    @pytest.mark.parametrize("p", range(2, 11))
    def test_cuadras_auge_lower_spearman_upper(self, p):
        for t in self.GRID:
            lo = cuadras_auge_closed_form(lower(p), t)
            rho = cuadras_auge_closed_form(SPEARMAN, t)
            up = cuadras_auge_closed_form(upper(p), t)
            assert lo <= rho + 1e-12 and rho <= up + 1e-12

    def test_raftery_reverse_ordering(self):
        for t in self.GRID[1:-1]:
            m = CopulaModel(Family.RAFTERY, t)
            rho = population_nu(SPEARMAN, m).value
            for p in range(2, 11):
                lo = population_nu(lower(p), m).value
                up = population_nu(upper(p), m).value
                assert up <= rho + 1e-9 and rho <= lo + 1e-9, (t, p)

    def test_cuadras_auge_monotone_in_p(self):
        for t in self.GRID:
            lo = [cuadras_auge_closed_form(lower(p), t) for p in range(1, 14)]
            up = [cuadras_auge_closed_form(upper(p), t) for p in range(1, 14)]
            assert np.all(np.diff(lo) <= 1e-12)
            assert np.all(np.diff(up) >= -1e-12)


class TestAverageQuadrantDependence:
    @pytest.mark.parametrize("p", [2, 3, 5])
    @pytest.mark.parametrize("model", [CopulaModel(Family.CLAYTON, 2.0), CopulaModel(Family.RAFTERY, 0.5),
                                       CopulaModel(Family.CUADRAS_AUGE, 0.4)], ids=str)
    def test_agrees_with_quadrature(self, p, model):
        est, se = lower_aqd_mc(p, model, reps=200_000, seed=p)
        assert abs(est - population_nu(lower(p), model).value) <= 3 * se


class TestCurves:
    def test_shape_and_content(self):
        rows = coefficient_curves(thetas=(0.0, 0.5, 1.0))
        assert len(rows) == 2 * 3 * 2 * len(CURVE_PS)
        assert set(rows[0]) == {"family", "variant", "p", "theta", "value"}
        for r in rows:
            if r["theta"] == 0.0:
                assert abs(r["value"]) < 1e-9
            if r["theta"] == 1.0:
                assert r["value"] == pytest.approx(1.0, abs=1e-7)
        assert CURVE_THETAS[0] == 0.0 and CURVE_THETAS[-1] == 1.0 and len(CURVE_THETAS) == 21
