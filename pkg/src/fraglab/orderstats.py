"""Joint order statistics of i.i.d. samples and their Gaussian main terms.

The largest-d-face statistic of a fragmented box is a sum of the d largest
of m normalized random walks, each approximately standard normal.  This
module carries the analytic side of that picture: the joint density of the
top d order statistics, its Gaussian specialization, the CDF and density of
the top-d sum via nested quadrature (Monte Carlo beyond three dimensions),
the windowed interval sums whose convergence to interval length is the
equidistribution statement, and the small exact-rational recursion and tail
bounds used to control the error terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from scipy.integrate import dblquad, quad
from scipy.special import ndtr

from .benford import validate_interval
from .errors import AccuracyError

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _phi(x):
    return math.exp(-0.5 * x * x) / _SQRT_2PI


def _Phi(x):
    return float(ndtr(x))


def order_constant(m, d):
    """m! / (m-d)!: the combinatorial constant of the top-d joint density."""
    if not (isinstance(m, (int, np.integer)) and isinstance(d, (int, np.integer))):
        raise ValueError("m and d must be integers")
    if not 1 <= d <= m <= 20:
        raise ValueError(f"need 1 <= d <= m <= 20, got d={d}, m={m}")
    return math.perm(int(m), int(d))


@dataclass(frozen=True)
class OrderStatModel:
    """Marginal law (pdf, cdf) of one sample plus the (m, d) order query.

    pdf/cdf default to the standard normal.  A perturbation pair models a
    nearly-Gaussian marginal: effective pdf = pdf + pdf_perturbation, and
    likewise for the cdf.  Declared sup-norm bounds on the perturbations
    are verified by sampling at construction; lying about them is an error.
    """

    m: int
    d: int
    pdf: object = None
    cdf: object = None
    pdf_perturbation: object = None
    pdf_perturbation_bound: float = 0.0
    cdf_perturbation: object = None
    cdf_perturbation_bound: float = 0.0

    def __post_init__(self):
        order_constant(self.m, self.d)
        for fn, bound, name in (
            (self.pdf_perturbation, self.pdf_perturbation_bound, "pdf"),
            (self.cdf_perturbation, self.cdf_perturbation_bound, "cdf"),
        ):
            if fn is None:
                continue
            if bound < 0:
                raise ValueError(f"declared {name} perturbation bound must be >= 0")
            grid = np.linspace(-12.0, 12.0, 2001)
            worst = max(abs(float(fn(x))) for x in grid)
            if worst > bound * (1.0 + 1e-9) + 1e-300:
                raise ValueError(
                    f"{name} perturbation exceeds its declared sup norm: "
                    f"{worst} > {bound}"
                )

    def density(self, x):
        base = _phi(x) if self.pdf is None else float(self.pdf(x))
        if self.pdf_perturbation is not None:
            base += float(self.pdf_perturbation(x))
        return base

    def distribution(self, x):
        base = _Phi(x) if self.cdf is None else float(self.cdf(x))
        if self.cdf_perturbation is not None:
            base += float(self.cdf_perturbation(x))
        return base


def joint_order_pdf(model, z):
    """Joint density of the d largest among m i.i.d. draws, ascending order.

    Zero off the ordered region z_1 <= ... <= z_d; on it,
    C * F(z_1)**(m-d) * prod f(z_j) with C = m!/(m-d)!.
    """
    z = np.asarray(z, dtype=float).ravel()
    if z.size != model.d:
        raise ValueError(f"expected {model.d} coordinates, got {z.size}")
    if np.any(np.diff(z) < 0.0):
        return 0.0
    value = float(order_constant(model.m, model.d))
    value *= model.distribution(z[0]) ** (model.m - model.d)
    for x in z:
        value *= model.density(x)
    return value


def main_term_pdf(m, d, z):
    """Gaussian specialization of joint_order_pdf, no model indirection."""
    z = np.asarray(z, dtype=float).ravel()
    if z.size != d:
        raise ValueError(f"expected {d} coordinates, got {z.size}")
    if np.any(np.diff(z) < 0.0):
        return 0.0
    value = float(order_constant(m, d)) * _Phi(z[0]) ** (m - d)
    for x in z:
        value *= _phi(x)
    return value


@dataclass(frozen=True)
class QuadratureSpec:
    """How hard to integrate: tolerances, the z_1 lower cut, and the scheme.

    scheme "auto" resolves to nested adaptive quadrature for d <= 3 and to
    sorted-sample Monte Carlo beyond; "nested" and "mc" force the choice.
    """

    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    lower_cut: float = -math.inf
    scheme: str = "auto"
    mc_samples: int = 1 << 20
    mc_seed: int = 20260815

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.scheme not in ("auto", "nested", "mc"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.mc_samples < 2:
            raise ValueError("mc_samples must be >= 2")

    def resolve(self, d):
        if self.scheme == "auto":
            return "nested" if d <= 3 else "mc"
        return self.scheme


@dataclass(frozen=True)
class AnalyticResult:
    """Value plus the error bound the evaluation actually achieved."""

    value: float
    achieved_tol: float
    scheme: str


def _check_achieved(value, achieved, spec, scheme):
    limit = max(spec.abs_tol, spec.rel_tol * abs(value))
    if achieved > limit:
        raise AccuracyError(
            f"{scheme} reached {achieved:.3e}, requested {limit:.3e}",
            achieved=achieved,
        )
    return AnalyticResult(value=value, achieved_tol=achieved, scheme=scheme)


# All marginal factors carry a phi(z); beyond this radius they are zero to
# double precision, so integration limits are clamped here.  An unclamped
# semi-infinite range lets adaptive quadrature step straight over the bump
# and report zero with a straight face.
_Z_MAX = 40.0


def _clamped_quad(fn, lo, hi, spec):
    lo = max(lo, -_Z_MAX)
    hi = min(hi, _Z_MAX)
    if hi <= lo:
        return 0.0, 0.0
    interior = [p for p in (-6.0, 0.0, 6.0) if lo < p < hi]
    return quad(
        fn, lo, hi,
        epsabs=spec.abs_tol, epsrel=spec.rel_tol,
        points=interior or None, limit=200,
    )


def main_cdf(m, d, y, spec=None):
    """Mass of the Gaussian top-d main term on {sum z <= y, z_1 > lower_cut}.

    Nested integration follows the ordered-region bounds: z_1 up to y/d,
    each later coordinate from its predecessor up to the equal-split limit
    of the remaining budget; the innermost coordinate integrates to a
    Gaussian CDF difference in closed form.
    """
    spec = spec or QuadratureSpec()
    C = float(order_constant(m, d))
    y = float(y)
    lc = spec.lower_cut
    scheme = spec.resolve(d)
    if scheme == "mc":
        return _mc_cdf(m, d, y, spec)
    if d == 1:
        if y <= lc:
            return AnalyticResult(0.0, 0.0, "nested_quadrature")
        val, err = _clamped_quad(
            lambda z: C * _Phi(z) ** (m - 1) * _phi(z), lc, y, spec
        )
        return _check_achieved(val, err, spec, "nested_quadrature")
    if d == 2:
        if y / 2.0 <= lc:
            return AnalyticResult(0.0, 0.0, "nested_quadrature")

        def outer(z1):
            return C * _Phi(z1) ** (m - 2) * _phi(z1) * (_Phi(y - z1) - _Phi(z1))

        val, err = _clamped_quad(outer, lc, y / 2.0, spec)
        return _check_achieved(val, err, spec, "nested_quadrature")
    if d == 3:
        if y / 3.0 <= lc:
            return AnalyticResult(0.0, 0.0, "nested_quadrature")

        def inner(z2, z1):
            return (
                C
                * _Phi(z1) ** (m - 3)
                * _phi(z1)
                * _phi(z2)
                * (_Phi(y - z1 - z2) - _Phi(z2))
            )

        val, err = dblquad(
            inner, max(lc, -_Z_MAX), min(y / 3.0, _Z_MAX),
            lambda z1: z1, lambda z1: min((y - z1) / 2.0, _Z_MAX),
            epsabs=spec.abs_tol, epsrel=spec.rel_tol,
        )
        return _check_achieved(val, err, spec, "nested_quadrature")
    raise ValueError("nested quadrature supports d <= 3; use the mc scheme")


def _mc_cdf(m, d, y, spec):
    rng = np.random.default_rng(spec.mc_seed)
    n = int(spec.mc_samples)
    hits = 0
    done = 0
    chunk = 1 << 16
    while done < n:
        take = min(chunk, n - done)
        z = rng.standard_normal((take, m))
        top = np.partition(z, m - d, axis=1)[:, m - d:]
        s = top.sum(axis=1)
        ok = s <= y
        if math.isfinite(spec.lower_cut):
            ok &= top.min(axis=1) > spec.lower_cut
        hits += int(np.count_nonzero(ok))
        done += take
    p = hits / n
    achieved = 3.0 * math.sqrt(max(p * (1.0 - p), 1.0 / n) / n)
    return _check_achieved(p, achieved, spec, "sorted_mc")


def main_density(m, d, y, spec=None):
    """Density of the top-d sum main term at y, by the reduced integral that
    drops the innermost coordinate (closed form at d = 1)."""
    spec = spec or QuadratureSpec()
    C = float(order_constant(m, d))
    y = float(y)
    lc = spec.lower_cut
    scheme = spec.resolve(d)
    if scheme == "mc":
        return _mc_density(m, d, y, spec)
    if d == 1:
        val = 0.0 if y <= lc else C * _phi(y) * _Phi(y) ** (m - 1)
        return AnalyticResult(val, 0.0, "closed_form")
    if d == 2:
        if y / 2.0 <= lc:
            return AnalyticResult(0.0, 0.0, "nested_quadrature")

        def outer(z1):
            return C * _Phi(z1) ** (m - 2) * _phi(z1) * _phi(y - z1)

        val, err = _clamped_quad(outer, lc, y / 2.0, spec)
        return _check_achieved(val, err, spec, "nested_quadrature")
    if d == 3:
        if y / 3.0 <= lc:
            return AnalyticResult(0.0, 0.0, "nested_quadrature")

        def inner(z2, z1):
            return (
                C
                * _Phi(z1) ** (m - 3)
                * _phi(z1)
                * _phi(z2)
                * _phi(y - z1 - z2)
            )

        val, err = dblquad(
            inner, max(lc, -_Z_MAX), min(y / 3.0, _Z_MAX),
            lambda z1: z1, lambda z1: min((y - z1) / 2.0, _Z_MAX),
            epsabs=spec.abs_tol, epsrel=spec.rel_tol,
        )
        return _check_achieved(val, err, spec, "nested_quadrature")
    raise ValueError("nested quadrature supports d <= 3; use the mc scheme")


def _mc_density(m, d, y, spec):
    # Smoothed central difference of the MC CDF; coarse, reported honestly.
    h = 0.05
    hi = _mc_cdf(m, d, y + h, spec)
    lo = _mc_cdf(m, d, y - h, replace(spec, mc_seed=spec.mc_seed + 1))
    val = (hi.value - lo.value) / (2.0 * h)
    achieved = (hi.achieved_tol + lo.achieved_tol) / (2.0 * h) + h * h
    return _check_achieved(val, achieved, spec, "mc_difference")


def equidistribution_sum(m, d, N, C_bound, a, b, spec=None):
    """Windowed sum of main-term interval masses over all integer shifts.

    Adds main_cdf((b+n)/sqrt(N)) - main_cdf((a+n)/sqrt(N)) for n in
    [-W, W), W = ceil(d * C_bound * N), with the z_1 cut at -C_bound *
    sqrt(N).  Convergence of this sum to b - a as N grows is the
    equidistribution statement for the box process.  Window terms whose
    y-interval lies entirely beyond the Gaussian support estimate are
    skipped; the skip is priced into the achieved tolerance.
    """
    spec = spec or QuadratureSpec()
    a, b = validate_interval(a, b)
    if N < 1:
        raise ValueError("N must be >= 1")
    if not (C_bound > 0 and math.isfinite(C_bound)):
        raise ValueError("C_bound must be positive and finite")
    order_constant(m, d)
    W = math.ceil(d * C_bound * N)
    sqrt_n = math.sqrt(N)
    cut = max(spec.lower_cut, -C_bound * sqrt_n)
    reach = 10.0 * math.sqrt(d) + float(m)
    # Per-term tolerances tight enough that the reported errors of O(W)
    # calls sum below the outer request; rel_tol must sit near roundoff or
    # quad's relative error estimates alone would exhaust the budget.
    per_term = replace(
        spec,
        abs_tol=max(spec.abs_tol / (16.0 * W), 5e-13),
        rel_tol=1e-12,
        lower_cut=cut,
        scheme=spec.scheme,
    )
    total = 0.0
    achieved = 2.0 * m * gaussian_tail(reach / d)  # skipped-tail allowance
    for n in range(-W, W):
        lo = (a + n) / sqrt_n
        hi = (b + n) / sqrt_n
        if hi < -reach or lo > reach:
            continue
        upper = main_cdf(m, d, hi, per_term)
        lower = main_cdf(m, d, lo, per_term)
        total += upper.value - lower.value
        achieved += upper.achieved_tol + lower.achieved_tol
    return _check_achieved(total, achieved, spec, "cdf_window_sum")


# ---------------------------------------------------------------------------
# Exact-rational recursion and tail bounds.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AkSequence:
    """Exact values A_{d-2}, ..., A_0 of the dimension-reduction recursion."""

    d: int
    exact: tuple

    @property
    def values(self):
        return [float(x) for x in self.exact]

    def a(self, k):
        """A_k as an exact Fraction, 0 <= k <= d-2."""
        if not 0 <= k <= self.d - 2:
            raise ValueError(f"k must lie in 0..{self.d - 2}, got {k}")
        return self.exact[self.d - 2 - k]


def ak_sequence(d):
    """Run A_{k-1} = A_k^2/(1+A_k^2) + A_k/(1+A_k)^2 down from A_{d-2} = 1/4.

    Exact rational arithmetic throughout; needs d >= 3.
    """
    if d < 3:
        raise ValueError(f"d must be >= 3, got {d}")
    values = [Fraction(1, 4)]
    for _ in range(d - 2):
        a = values[-1]
        values.append(a * a / (1 + a * a) + a / ((1 + a) * (1 + a)))
    return AkSequence(d=d, exact=tuple(values[: d - 1]))


def gaussian_tail(g):
    """Upper tail mass of the standard normal beyond g, via erfc.

    Satisfies gaussian_tail(g) <= exp(-g/2) for every g >= 1.
    """
    g = float(g)
    if not math.isfinite(g):
        raise ValueError(f"g must be finite, got {g!r}")
    return 0.5 * math.erfc(g / math.sqrt(2.0))


def d2_envelope(m, y, C_bound, N):
    """Dominating envelope phi(y/2) + phi(y + C sqrt(N)) for the second
    derivative of the two-dimensional main CDF on the walk's support."""
    if m < 2:
        raise ValueError(f"the two-face envelope needs m >= 2, got {m}")
    if N < 1:
        raise ValueError("N must be >= 1")
    if not (C_bound > 0 and math.isfinite(C_bound)):
        raise ValueError("C_bound must be positive and finite")
    y = float(y)
    return _phi(y / 2.0) + _phi(y + C_bound * math.sqrt(N))
