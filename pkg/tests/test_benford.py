import io
import math

import numpy as np
import pytest

from fraglab.benford import (
    MERGE_TOL,
    MantissaDistribution,
    benford_cdf,
    benford_digit_prob,
    fold_unit,
    mantissa,
    significand,
    validate_base,
    validate_interval,
)


class TestSignificand:
    def test_reference_values(self):
        assert significand(123.456) == pytest.approx(1.23456, abs=1e-12)
        assert significand(0.00123) == pytest.approx(1.23, abs=1e-12)
        assert significand(1.0) == 1.0
        assert significand(10.0) == 1.0
        assert significand(9.999) == pytest.approx(9.999, abs=1e-12)

    def test_other_bases(self):
        assert significand(10.0, base=2) == pytest.approx(1.25)
        assert significand(27.0, base=3) == 1.0
        assert significand(5.0, base=16) == 5.0

    def test_extreme_magnitudes(self):
        # Subnormals and near-overflow inputs must not leave [1, base).
        for x in (5e-324, 2.2e-308, 1.7e308, 1e-300, 1e300):
            s = significand(x)
            assert 1.0 <= s < 10.0

    def test_reconstruction(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            x = float(np.exp(rng.uniform(-600, 600)))
            s = significand(x)
            assert 1.0 <= s < 10.0
            # log10 x and log10 s agree modulo 1
            gap = (math.log10(x) - math.log10(s)) % 1.0
            assert min(gap, 1.0 - gap) < 1e-9

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, -math.inf, math.nan])
    def test_rejects_nonpositive(self, bad):
        with pytest.raises(ValueError):
            significand(bad)

    def test_rejects_bad_base(self):
        for bad in (1, 0, -2, 2.0, True):
            with pytest.raises(ValueError):
                significand(2.0, base=bad)


class TestMantissa:
    def test_matches_significand_log(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            x = float(np.exp(rng.uniform(-50, 50)))
            assert mantissa(x) == pytest.approx(
                math.log10(significand(x)), abs=1e-9
            )

    def test_exact_powers_fold_to_zero(self):
        for k in (-5, 0, 1, 5, 100):
            assert mantissa(10.0 ** k) == 0.0

    def test_fold_back_near_one(self):
        # A mantissa within MERGE_TOL below 1.0 is the same circle point as 0.
        x = 10.0 ** (3.0 - 1e-13)
        assert mantissa(x) == 0.0

    def test_plain_value(self):
        assert mantissa(2.0) == pytest.approx(math.log10(2.0), abs=1e-15)
        assert mantissa(2.0, base=2) == 0.0

    @pytest.mark.parametrize("bad", [0.0, -3.0, math.inf, math.nan])
    def test_rejects_nonpositive(self, bad):
        with pytest.raises(ValueError):
            mantissa(bad)


def test_fold_unit_matches_scalar_mantissa():
    rng = np.random.default_rng(13)
    logs = rng.uniform(-20, 20, size=500)
    folded = fold_unit(logs)
    for lv, fv in zip(logs[:50], folded[:50]):
        assert fv == pytest.approx(mantissa(10.0 ** lv), abs=1e-9)
    assert np.all((folded >= 0.0) & (folded < 1.0))


def test_fold_unit_fold_back():
    out = fold_unit(np.array([1.0 - 1e-14, 2.0 - 1e-13, 0.3, -0.25]))
    assert out[0] == 0.0
    assert out[1] == 0.0
    assert out[2] == pytest.approx(0.3)
    assert out[3] == pytest.approx(0.75)


class TestBenfordLaw:
    def test_digit_probabilities_base10(self):
        assert benford_digit_prob(1) == pytest.approx(math.log10(2.0))
        assert benford_digit_prob(9) == pytest.approx(math.log10(10.0 / 9.0))

    def test_digit_probabilities_sum_to_one(self):
        for base in (2, 3, 10, 16):
            total = sum(benford_digit_prob(d, base) for d in range(1, base))
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_digit_range_enforced(self):
        with pytest.raises(ValueError):
            benford_digit_prob(0)
        with pytest.raises(ValueError):
            benford_digit_prob(10)
        with pytest.raises(ValueError):
            benford_digit_prob(2, base=2)

    def test_cdf_endpoints_and_midpoint(self):
        assert benford_cdf(1.0) == 0.0
        assert benford_cdf(10.0) == 1.0
        assert benford_cdf(math.sqrt(10.0)) == pytest.approx(0.5)
        with pytest.raises(ValueError):
            benford_cdf(0.5)
        with pytest.raises(ValueError):
            benford_cdf(11.0)

    def test_cdf_increments_are_digit_probs(self):
        for d in range(1, 10):
            inc = benford_cdf(d + 1.0) - benford_cdf(float(d))
            assert inc == pytest.approx(benford_digit_prob(d), abs=1e-12)


def test_validate_interval():
    assert validate_interval(0, 1) == (0.0, 1.0)
    for a, b in ((0.5, 0.5), (0.7, 0.2), (-0.1, 0.5), (0.2, 1.1)):
        with pytest.raises(ValueError):
            validate_interval(a, b)


def test_validate_base_normalizes():
    assert validate_base(np.int64(10)) == 10
    assert isinstance(validate_base(np.int64(10)), int)


class TestMantissaDistribution:
    def test_from_atoms_validation(self):
        with pytest.raises(ValueError):
            MantissaDistribution.from_atoms([], [])
        with pytest.raises(ValueError):
            MantissaDistribution.from_atoms([0.1, 0.2], [0.0])
        with pytest.raises(ValueError):
            MantissaDistribution.from_atoms([1.0], [0.0])
        with pytest.raises(ValueError):
            MantissaDistribution.from_atoms([-0.1], [0.0])

    def test_queries_require_finalize(self):
        dist = MantissaDistribution.from_atoms([0.5], [0.0])
        with pytest.raises(RuntimeError):
            dist.interval_mass(0.1, 0.9)
        with pytest.raises(RuntimeError):
            dist.ks_to_benford()
        with pytest.raises(RuntimeError):
            _ = dist.weights

    def test_finalize_is_idempotent(self):
        dist = MantissaDistribution.from_atoms([0.5, 0.2], [0.0, 0.0]).finalize()
        m = dist.mantissas.copy()
        dist.finalize()
        assert np.array_equal(dist.mantissas, m)

    def test_normalization_ignores_input_scale(self):
        # Same shape at two wildly different raw scales.
        a = MantissaDistribution.from_atoms([0.2, 0.8], [0.0, 0.0]).finalize()
        b = MantissaDistribution.from_atoms([0.2, 0.8], [700.0, 700.0]).finalize()
        assert np.allclose(a.weights, b.weights)
        assert a.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_merge_weighted_mean(self):
        dist = MantissaDistribution.from_atoms(
            [0.1, 0.1 + 5e-13, 0.5],
            np.log([0.25, 0.25, 0.5]),
        ).finalize()
        assert dist.mantissas.size == 2
        assert dist.mantissas[0] == pytest.approx(0.1 + 2.5e-13, abs=1e-15)
        assert dist.weights[0] == pytest.approx(0.5)

    def test_merge_is_transitive_along_chains(self):
        # Adjacent gaps below tolerance merge even when the chain ends up
        # wider than the tolerance itself.
        atoms = [0.3, 0.3 + 0.8e-12, 0.3 + 1.6e-12]
        dist = MantissaDistribution.from_atoms(atoms, [0.0] * 3).finalize()
        assert dist.mantissas.size == 1

    def test_merge_keeps_distinct_atoms(self):
        atoms = [0.3, 0.3 + 1e-9]
        dist = MantissaDistribution.from_atoms(atoms, [0.0, 0.0]).finalize()
        assert dist.mantissas.size == 2

    def test_merge_survives_huge_weight_spread(self):
        # Groups far below the heaviest atom must not underflow to nan.
        dist = MantissaDistribution.from_atoms(
            [0.1, 0.1 + 1e-13, 0.9],
            [-900.0, -900.5, 0.0],
        ).finalize()
        assert dist.mantissas.size == 2
        assert np.all(np.isfinite(dist.mantissas))
        assert dist.mantissas[0] == pytest.approx(0.1, abs=1e-12)
        assert dist.weights.sum() == pytest.approx(1.0)

    def test_interval_mass_is_strictly_open(self):
        dist = MantissaDistribution.from_atoms(
            [0.2, 0.5, 0.7], np.log([0.25, 0.5, 0.25])
        ).finalize()
        assert dist.interval_mass(0.2, 0.7) == pytest.approx(0.5)
        assert dist.interval_mass(0.1, 0.8) == pytest.approx(1.0)
        assert dist.interval_mass(0.5, 0.7) == 0.0

    def test_ks_single_atom(self):
        dist = MantissaDistribution.from_atoms([0.5], [0.0]).finalize()
        assert dist.ks_to_benford() == pytest.approx(0.5)

    def test_ks_two_symmetric_atoms(self):
        dist = MantissaDistribution.from_atoms(
            [0.25, 0.75], np.log([0.5, 0.5])
        ).finalize()
        assert dist.ks_to_benford() == pytest.approx(0.25)

    @pytest.mark.parametrize("n", [4, 10, 100])
    def test_ks_equal_lattice(self, n):
        dist = MantissaDistribution.from_atoms(
            np.arange(n) / n, np.full(n, -math.log(n))
        ).finalize()
        assert dist.ks_to_benford() == pytest.approx(1.0 / n, abs=1e-12)

    def test_ks_against_scan_oracle(self):
        # Dense scan of |CDF - t| cannot exceed the jump-point evaluation.
        rng = np.random.default_rng(5)
        dist = MantissaDistribution.from_atoms(
            rng.uniform(0, 1, 40), rng.normal(0, 1, 40)
        ).finalize()
        ks = dist.ks_to_benford()
        ts = np.linspace(0, 1, 20001)
        cdf = np.searchsorted(dist.mantissas, ts, side="right")
        emp = np.concatenate(([0.0], np.cumsum(dist.weights)))[cdf]
        scan = np.abs(emp - ts).max()
        assert scan <= ks + 1e-9
        assert ks <= scan + dist.weights.max() + 1e-9

    def test_partition_masses_account_for_everything(self):
        rng = np.random.default_rng(6)
        dist = MantissaDistribution.from_atoms(
            rng.uniform(0, 1, 300), rng.normal(0, 2, 300)
        ).finalize()
        edges = np.linspace(0.0, 1.0, 21)
        total = sum(
            dist.interval_mass(a, b) for a, b in zip(edges[:-1], edges[1:])
        )
        on_edges = dist.weights[np.isin(dist.mantissas, edges)].sum()
        assert total + on_edges == pytest.approx(1.0, abs=1e-9)

    def test_csv_round_trip(self):
        rng = np.random.default_rng(7)
        dist = MantissaDistribution.from_atoms(
            rng.uniform(0, 1, 50), rng.normal(0, 1, 50)
        ).finalize()
        buf = io.StringIO()
        dist.write_csv(buf)
        buf.seek(0)
        back = MantissaDistribution.read_csv(buf)
        assert np.array_equal(back.mantissas, dist.mantissas)
        np.testing.assert_allclose(back.weights, dist.weights, rtol=0, atol=1e-16)

    def test_csv_rejects_bad_header(self):
        with pytest.raises(ValueError):
            MantissaDistribution.read_csv(io.StringIO("a,b\n1,2\n"))

    def test_merge_tolerance_constant(self):
        assert MERGE_TOL == 1e-12
