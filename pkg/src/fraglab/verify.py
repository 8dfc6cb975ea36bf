"""Fast self-checks runnable from the command line.

Each check is small enough to run in a second or two and exercises one
identity or cross-route agreement that the heavier test suite also
covers.  Prints one PASS/FAIL line per check and returns the number of
failures.
"""

from __future__ import annotations

import io
import math
import os
from fractions import Fraction

import numpy as np
from scipy.special import ndtr

from . import benford, boxfrag, diophantine, orderstats, stick


def _check(lines, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail and not ok else ""
    lines.append(f"[{status}] {name}{suffix}")
    return bool(ok)


def run_verification(out=None):
    """Run every check, print one line each, return failure count."""
    lines = []
    failures = 0

    # Composition enumeration round-trips through rank/unrank.
    ok = True
    for total, parts in ((5, 3), (7, 2), (4, 4)):
        for rank, comp in enumerate(stick.compositions(total, parts)):
            if stick.composition_rank(comp) != rank:
                ok = False
            if stick.composition_from_rank(rank, total, parts) != comp:
                ok = False
        if rank + 1 != stick.composition_count(total, parts):
            ok = False
    failures += not _check(lines, "composition rank round-trip", ok)

    # Multinomial coefficient equals the product of its binomial prefix steps.
    ok = all(
        stick.verify_multinomial_factorization(comp)
        for comp in stick.compositions(8, 3)
    )
    failures += not _check(lines, "multinomial factorization identity", ok)

    # Weighted composition sums recover m^N two ways.
    ok = all(stick.verify_power_identity(N, m) for N in (4, 9) for m in (2, 3, 4))
    failures += not _check(lines, "power identity over compositions", ok)

    # Exact engine agrees with direct tree enumeration on a small case.
    p = stick.as_proportions((0.6, 0.4))
    d_exact = stick.exact_mantissa_distribution(p, 6)
    d_brute = stick.brute_force_mantissa(p, 6)
    ok = (
        d_exact.mantissas.size == d_brute.mantissas.size
        and np.allclose(d_exact.mantissas, d_brute.mantissas, atol=1e-12)
        and np.allclose(d_exact.weights, d_brute.weights, atol=1e-12)
    )
    failures += not _check(lines, "exact vs brute-force distribution", ok)

    # Significand and mantissa behave at awkward magnitudes.
    ok = (
        abs(benford.significand(123.456) - 1.23456) < 1e-12
        and 1.0 <= benford.significand(5e-324) < 10.0
        and benford.mantissa(1.0) == 0.0
        and benford.mantissa(10.0**5) == 0.0
        and abs(benford.mantissa(2.0) - math.log10(2.0)) < 1e-15
    )
    failures += not _check(lines, "significand/mantissa edge cases", ok)

    # Rational log-ratio collapses the distribution onto few atoms.
    p_rat = stick.as_proportions((10.0 / 11.0, 1.0 / 11.0))
    d_rat = stick.exact_mantissa_distribution(p_rat, 12)
    ok = d_rat.mantissas.size <= 13
    failures += not _check(
        lines, "rational ratio degeneracy", ok, f"atoms={d_rat.mantissas.size}"
    )

    # KS distance against known point-mass configurations.
    one = benford.MantissaDistribution.from_atoms([0.5], [0.0]).finalize()
    two = benford.MantissaDistribution.from_atoms(
        [0.25, 0.75], [math.log(0.5)] * 2
    ).finalize()
    ok = (
        abs(one.ks_to_benford() - 0.5) < 1e-12
        and abs(two.ks_to_benford() - 0.25) < 1e-12
    )
    failures += not _check(lines, "KS distance reference values", ok)

    # Truncated estimator stays within its own reported error budget.
    params = stick.TruncationParams(epsilon=0.5, delta=0.04)
    p3 = stick.as_proportions((0.5, 0.3, 0.2))
    exact = stick.exact_interval_probability(p3, 60, 0.2, 0.7)
    tr = stick.truncated_estimate(p3, 60, 0.2, 0.7, params)
    budget = tr.dropped_mass_bound + tr.block_error_bound
    ok = abs(tr.value - exact) <= budget
    failures += not _check(
        lines, "truncated estimate within error budget", ok,
        f"|diff|={abs(tr.value - exact):.3g} budget={budget:.3g}",
    )

    # Volume-coefficient recursion: exact rational value and positivity.
    seq = orderstats.ak_sequence(3)
    ok = seq.exact[-1] == Fraction(93, 425) and all(
        v > 0 for v in orderstats.ak_sequence(8).values
    )
    failures += not _check(lines, "coefficient recursion value 93/425", ok)

    # Gaussian tail bound dominates on a grid.
    gs = np.linspace(1.0, 8.0, 29)
    ok = all(orderstats.gaussian_tail(g) <= math.exp(-g / 2.0) for g in gs)
    failures += not _check(lines, "gaussian tail bound", ok)

    # d-face log-volume agrees with the subset-sum oracle.
    rng = np.random.default_rng(7)
    ls = rng.normal(0.0, 2.0, size=6)
    ok = all(
        abs(boxfrag.vol_d_log(ls, d, 10) - math.log10(boxfrag.vol_d_bruteforce(ls, d)))
        < 1e-9
        for d in range(1, 7)
    )
    failures += not _check(lines, "vol_d vs subset-sum oracle", ok)

    # Largest-face statistic equals sorting route.
    top = np.sort(ls)[-3:]
    ok = abs(boxfrag.max_face_volume(ls, 3) - float(np.sort(top).sum())) < 1e-12
    failures += not _check(lines, "max face vs sorted route", ok)

    # Monte Carlo is reproducible and thread-count independent.
    cut = boxfrag.CutDistribution.log_uniform(-1.0, 1.0)
    cfg = boxfrag.ProcessConfig(
        m=3, N=20, cut=cut, base=10, trials=512, seed=99,
        statistic="vol_d", d=2,
    )
    d1 = boxfrag.monte_carlo_mantissa(cfg)
    old = os.environ.get("FRAGLAB_THREADS")
    os.environ["FRAGLAB_THREADS"] = "3"
    try:
        d3 = boxfrag.monte_carlo_mantissa(cfg)
    finally:
        if old is None:
            os.environ.pop("FRAGLAB_THREADS", None)
        else:
            os.environ["FRAGLAB_THREADS"] = old
    ok = np.array_equal(d1.mantissas, d3.mantissas) and np.array_equal(
        d1.log_weights, d3.log_weights
    )
    failures += not _check(lines, "simulation determinism across workers", ok)

    # Largest-of-m CDF reduces to the m-th power of the normal CDF.
    ok = all(
        abs(orderstats.main_cdf(m, 1, y).value - float(ndtr(y)) ** m) < 1e-8
        for m in (2, 4) for y in (-1.0, 0.0, 1.5)
    )
    failures += not _check(lines, "top-1 CDF closed-form agreement", ok)

    # Lattice point counting inside an interval.
    n_in = diophantine.count_equidistributed_indices(
        math.sqrt(2.0), 0.0, 1000, 0.2, 0.7
    )
    ok = abs(n_in / 1000.0 - 0.5) < 0.05
    failures += not _check(lines, "equidistributed index count", ok, f"count={n_in}")

    # CSV round-trip preserves the distribution bit-for-bit.
    buf = io.StringIO()
    d_exact.write_csv(buf)
    buf.seek(0)
    back = benford.MantissaDistribution.read_csv(buf)
    ok = np.array_equal(back.mantissas, d_exact.mantissas) and np.allclose(
        back.weights, d_exact.weights, rtol=0, atol=1e-16
    )
    failures += not _check(lines, "CSV round-trip", ok)

    text = "\n".join(lines)
    if out is None:
        print(text)
    else:
        out.write(text + "\n")
    return failures
