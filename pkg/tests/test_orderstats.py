import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ndtr
from scipy.stats import norm

from fraglab.errors import AccuracyError
from fraglab.orderstats import (
    AkSequence,
    OrderStatModel,
    QuadratureSpec,
    ak_sequence,
    d2_envelope,
    equidistribution_sum,
    gaussian_tail,
    joint_order_pdf,
    main_cdf,
    main_density,
    main_term_pdf,
    order_constant,
)


class TestOrderConstant:
    def test_permutation_values(self):
        assert order_constant(5, 2) == 20
        assert order_constant(4, 4) == 24
        assert order_constant(7, 1) == 7

    def test_validation(self):
        with pytest.raises(ValueError):
            order_constant(3, 4)
        with pytest.raises(ValueError):
            order_constant(21, 2)
        with pytest.raises(ValueError):
            order_constant(3.0, 2)
        with pytest.raises(ValueError):
            order_constant(3, 0)


class TestOrderStatModel:
    def test_default_marginal_is_standard_normal(self):
        model = OrderStatModel(m=4, d=2)
        assert model.density(0.0) == pytest.approx(1.0 / math.sqrt(2 * math.pi))
        assert model.distribution(0.0) == pytest.approx(0.5)

    def test_perturbation_is_added(self):
        model = OrderStatModel(
            m=3, d=1,
            pdf_perturbation=lambda x: 0.01 * math.exp(-x * x),
            pdf_perturbation_bound=0.01,
        )
        assert model.density(0.0) == pytest.approx(
            1.0 / math.sqrt(2 * math.pi) + 0.01
        )

    def test_lying_about_the_bound_is_rejected(self):
        with pytest.raises(ValueError):
            OrderStatModel(
                m=3, d=1,
                pdf_perturbation=lambda x: 0.5 * math.exp(-x * x),
                pdf_perturbation_bound=0.01,
            )
        with pytest.raises(ValueError):
            OrderStatModel(
                m=3, d=1,
                cdf_perturbation=lambda x: 0.2,
                cdf_perturbation_bound=-0.1,
            )

    def test_custom_marginal(self):
        # Uniform on (0, 1) marginal: top-1 of m has density m * x**(m-1).
        model = OrderStatModel(
            m=3, d=1,
            pdf=lambda x: 1.0 if 0 <= x <= 1 else 0.0,
            cdf=lambda x: min(1.0, max(0.0, x)),
        )
        assert joint_order_pdf(model, [0.5]) == pytest.approx(3 * 0.25)


class TestJointOrderPdf:
    def test_zero_off_the_ordered_region(self):
        model = OrderStatModel(m=4, d=2)
        assert joint_order_pdf(model, [1.0, 0.0]) == 0.0
        assert joint_order_pdf(model, [0.0, 1.0]) > 0.0

    def test_hand_formula_small_cases(self):
        phi = norm.pdf
        Phi = norm.cdf
        model = OrderStatModel(m=2, d=1)
        assert joint_order_pdf(model, [0.3]) == pytest.approx(
            2 * Phi(0.3) * phi(0.3)
        )
        model = OrderStatModel(m=2, d=2)
        assert joint_order_pdf(model, [-0.5, 1.0]) == pytest.approx(
            2 * phi(-0.5) * phi(1.0)
        )

    def test_main_term_pdf_is_the_gaussian_specialization(self):
        rng = np.random.default_rng(61)
        model = OrderStatModel(m=5, d=3)
        for _ in range(50):
            z = np.sort(rng.normal(0, 1.5, 3))
            assert main_term_pdf(5, 3, z) == pytest.approx(
                joint_order_pdf(model, z), rel=1e-12
            )

    def test_dimension_check(self):
        model = OrderStatModel(m=4, d=2)
        with pytest.raises(ValueError):
            joint_order_pdf(model, [0.0, 0.5, 1.0])

    def test_sorted_sample_histogram_oracle(self):
        # Empirical joint law of the top 2 of 4 against the density, on a
        # coarse cell where both are cheap and stable.
        rng = np.random.default_rng(62)
        z = np.sort(rng.standard_normal((200_000, 4)), axis=1)[:, 2:]
        cell = ((z[:, 0] > 0.0) & (z[:, 0] < 0.4)
                & (z[:, 1] > 0.4) & (z[:, 1] < 0.8))
        emp = cell.mean()
        model = OrderStatModel(m=4, d=2)
        from scipy.integrate import dblquad

        exact, _ = dblquad(
            lambda z2, z1: joint_order_pdf(model, (z1, z2)),
            0.0, 0.4, 0.4, 0.8,
        )
        assert emp == pytest.approx(exact, abs=4 * math.sqrt(exact / 200_000))


class TestQuadratureSpec:
    def test_auto_scheme_resolution(self):
        spec = QuadratureSpec()
        assert spec.resolve(1) == "nested"
        assert spec.resolve(3) == "nested"
        assert spec.resolve(4) == "mc"
        assert QuadratureSpec(scheme="mc").resolve(2) == "mc"

    def test_validation(self):
        with pytest.raises(ValueError):
            QuadratureSpec(abs_tol=0.0)
        with pytest.raises(ValueError):
            QuadratureSpec(scheme="magic")
        with pytest.raises(ValueError):
            QuadratureSpec(mc_samples=1)


class TestMainCdf:
    def test_top1_closed_form(self):
        for m in (2, 3, 5):
            for y in (-2.0, 0.0, 0.7, 2.5):
                res = main_cdf(m, 1, y)
                assert res.value == pytest.approx(float(ndtr(y)) ** m, abs=1e-8)
                assert res.scheme == "nested_quadrature"

    def test_total_mass_is_one(self):
        for m, d in ((3, 2), (4, 3)):
            assert main_cdf(m, d, 40.0).value == pytest.approx(1.0, abs=1e-7)

    def test_monotone_in_y(self):
        ys = np.linspace(-4, 4, 9)
        vals = [main_cdf(4, 2, y).value for y in ys]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_lower_cut_removes_mass(self):
        full = main_cdf(4, 2, 1.0).value
        cut = main_cdf(4, 2, 1.0, QuadratureSpec(lower_cut=0.0)).value
        assert cut < full
        gone = main_cdf(4, 2, 1.0, QuadratureSpec(lower_cut=0.5)).value
        assert gone == 0.0

    def test_nested_vs_mc_agreement(self):
        spec = QuadratureSpec(scheme="mc", abs_tol=1e-2, rel_tol=1e-2,
                              mc_samples=1 << 18)
        for m, d, y in ((4, 2, 1.0), (5, 3, 2.0)):
            nested = main_cdf(m, d, y)
            mc = main_cdf(m, d, y, spec)
            assert mc.value == pytest.approx(nested.value, abs=3 * mc.achieved_tol)
            assert mc.scheme == "sorted_mc"

    def test_d_four_needs_mc(self):
        with pytest.raises(ValueError):
            main_cdf(5, 4, 1.0, QuadratureSpec(scheme="nested"))
        res = main_cdf(5, 4, 2.0, QuadratureSpec(abs_tol=1e-2, rel_tol=1e-2))
        assert res.scheme == "sorted_mc"
        assert 0.0 < res.value < 1.0

    def test_mc_below_cut_accounting(self):
        # With a cut at 0 the MC and nested routes must agree on the
        # truncated mass, not just the full one.
        spec_mc = QuadratureSpec(scheme="mc", abs_tol=1e-2, rel_tol=1e-2,
                                 lower_cut=0.0, mc_samples=1 << 17)
        nested = main_cdf(3, 2, 1.5, QuadratureSpec(lower_cut=0.0))
        mc = main_cdf(3, 2, 1.5, spec_mc)
        assert mc.value == pytest.approx(nested.value, abs=3 * mc.achieved_tol)

    def test_accuracy_error_carries_achieved(self):
        spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-12, scheme="mc",
                              mc_samples=4096)
        with pytest.raises(AccuracyError) as info:
            main_cdf(4, 2, 1.0, spec)
        assert info.value.achieved is not None
        assert info.value.achieved > 1e-12


class TestMainDensity:
    def test_top1_closed_form_matches_cdf_derivative(self):
        for m in (2, 4):
            for y in (-1.0, 0.5, 1.5):
                res = main_density(m, 1, y)
                assert res.scheme == "closed_form"
                h = 1e-5
                num = (main_cdf(m, 1, y + h).value
                       - main_cdf(m, 1, y - h).value) / (2 * h)
                assert res.value == pytest.approx(num, rel=1e-6, abs=1e-9)

    @pytest.mark.parametrize("m,d", [(3, 2), (4, 2), (4, 3)])
    def test_density_is_cdf_derivative(self, m, d):
        for y in (-0.5, 1.0, 2.5):
            h = 1e-4
            num = (main_cdf(m, d, y + h).value
                   - main_cdf(m, d, y - h).value) / (2 * h)
            assert main_density(m, d, y).value == pytest.approx(
                num, rel=1e-5, abs=1e-8
            )

    def test_density_integrates_to_one(self):
        val, _ = quad(lambda y: main_density(3, 2, y).value, -12, 12, limit=200)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_mc_density(self):
        # The central difference divides the CLT noise by 2h, so the
        # honest tolerance here is coarse.
        spec = QuadratureSpec(scheme="mc", abs_tol=0.2, rel_tol=0.2,
                              mc_samples=1 << 17)
        res = main_density(4, 2, 1.0, spec)
        exact = main_density(4, 2, 1.0)
        assert res.scheme == "mc_difference"
        assert res.value == pytest.approx(exact.value, abs=3 * res.achieved_tol)


class TestEquidistributionSum:
    def test_converges_to_interval_length(self):
        res = equidistribution_sum(3, 2, 25, math.sqrt(3.0), 0.2, 0.7)
        assert res.value == pytest.approx(0.5, abs=1e-6)
        assert res.scheme == "cdf_window_sum"

    def test_top1_case(self):
        res = equidistribution_sum(3, 1, 30, 1.5, 0.1, 0.4)
        assert res.value == pytest.approx(0.3, abs=1e-6)

    def test_validation(self):
        with pytest.raises(ValueError):
            equidistribution_sum(3, 2, 0, 1.0, 0.2, 0.7)
        with pytest.raises(ValueError):
            equidistribution_sum(3, 2, 10, -1.0, 0.2, 0.7)
        with pytest.raises(ValueError):
            equidistribution_sum(3, 2, 10, 1.0, 0.7, 0.2)


class TestAkSequence:
    def test_d3_exact_value(self):
        seq = ak_sequence(3)
        assert seq.exact == (Fraction(1, 4), Fraction(93, 425))
        assert seq.a(1) == Fraction(1, 4)
        assert seq.a(0) == Fraction(93, 425)

    def test_hand_step(self):
        # One recursion step from 1/4, done by hand with fractions.
        a = Fraction(1, 4)
        expect = a * a / (1 + a * a) + a / ((1 + a) * (1 + a))
        assert expect == Fraction(93, 425)

    def test_values_positive_and_decreasing(self):
        for d in range(3, 11):
            seq = ak_sequence(d)
            vals = seq.values
            assert len(vals) == d - 1
            assert all(v > 0 for v in vals)
            assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_index_bounds(self):
        seq = ak_sequence(4)
        assert seq.a(2) == Fraction(1, 4)
        with pytest.raises(ValueError):
            seq.a(3)
        with pytest.raises(ValueError):
            seq.a(-1)
        with pytest.raises(ValueError):
            ak_sequence(2)

    def test_is_frozen_record(self):
        seq = ak_sequence(3)
        assert isinstance(seq, AkSequence)
        with pytest.raises(AttributeError):
            seq.d = 5


class TestTailBounds:
    def test_gaussian_tail_matches_survival_function(self):
        for g in (-1.0, 0.0, 0.5, 2.0, 6.0):
            assert gaussian_tail(g) == pytest.approx(
                float(norm.sf(g)), rel=1e-12, abs=1e-300
            )

    def test_exponential_domination(self):
        for g in np.linspace(1.0, 12.0, 45):
            assert gaussian_tail(g) <= math.exp(-g / 2.0)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            gaussian_tail(math.inf)

    def test_d2_envelope_formula(self):
        y, C, N = 0.8, 1.5, 9
        expect = norm.pdf(y / 2.0) + norm.pdf(y + C * 3.0)
        assert d2_envelope(4, y, C, N) == pytest.approx(expect, rel=1e-12)

    def test_d2_envelope_validation(self):
        with pytest.raises(ValueError):
            d2_envelope(1, 0.0, 1.0, 4)
        with pytest.raises(ValueError):
            d2_envelope(3, 0.0, -1.0, 4)
        with pytest.raises(ValueError):
            d2_envelope(3, 0.0, 1.0, 0)
