"""Continued fractions, rationality verdicts, and orbit interval counts.

The stick engine's convergence question reduces to whether certain log
ratios are irrational, and at what quality they resist rational
approximation.  Floating-point inputs can never settle that question, so
everything here is an explicitly labeled heuristic: expansions halt at a
noise floor, verdicts say "irrational_like" rather than "irrational", and
exponent estimates come from convergent growth, not from number theory.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

from .benford import validate_interval

# Quotients extracted after the running fractional part falls below this
# multiple of machine epsilon are noise, not structure.
_RESIDUAL_GUARD = 256 * sys.float_info.epsilon


@dataclass(frozen=True)
class ContinuedFraction:
    """Quotients [a0; a1, a2, ...] and the matching convergents p/q.

    Convergents come from the standard two-term recurrence, which keeps
    every p/q automatically in lowest terms.
    """

    quotients: tuple
    convergents: tuple

    @classmethod
    def from_quotients(cls, quotients):
        quotients = tuple(int(a) for a in quotients)
        if not quotients:
            raise ValueError("need at least one quotient")
        if any(a < 1 for a in quotients[1:]):
            raise ValueError("quotients after the first must be >= 1")
        p_m1, p_m2 = 1, 0
        q_m1, q_m2 = 0, 1
        convergents = []
        for a in quotients:
            p_m1, p_m2 = a * p_m1 + p_m2, p_m1
            q_m1, q_m2 = a * q_m1 + q_m2, q_m1
            convergents.append((p_m1, q_m1))
        return cls(quotients=quotients, convergents=tuple(convergents))


def continued_fraction(x, max_terms=32, q_cap=10 ** 15):
    """Euclidean continued-fraction expansion of a float.

    Halts at max_terms, before any convergent denominator would exceed
    q_cap, or when the running fractional part drops below the noise floor
    256 * eps * max(1, |x|).  A fractional part within the same tolerance
    of 1 is rounded up, which avoids the classical spurious-huge-quotient
    failure of float expansions.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    max_terms = int(max_terms)
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    if q_cap < 1:
        raise ValueError("q_cap must be >= 1")
    tol = _RESIDUAL_GUARD * max(1.0, abs(x))
    quotients = []
    q_m1, q_m2 = 0, 1
    cur = x
    while len(quotients) < max_terms:
        a = math.floor(cur)
        frac = cur - a
        if frac >= 1.0 - tol:
            a += 1
            frac = 0.0
        q_next = a * q_m1 + q_m2
        if q_next > q_cap:
            break
        quotients.append(a)
        q_m1, q_m2 = q_next, q_m1
        if frac <= tol:
            break
        cur = 1.0 / frac
    if not quotients:
        raise ValueError(
            f"no convergent with denominator <= {q_cap} exists for {x!r}"
        )
    return ContinuedFraction.from_quotients(quotients)


@dataclass(frozen=True)
class RationalityVerdict:
    """Outcome of a bounded search for rational structure in a float.

    kind is "rational" (some convergent p/q with q <= the cap approximates
    x within tolerance) or "irrational_like" (none does).  evidence_depth
    counts the quotients extracted before the noise floor; kappa_estimate
    is present only when enough convergents exist to estimate growth.
    """

    x: float
    kind: str
    p: int | None = None
    q: int | None = None
    kappa_estimate: float | None = None
    evidence_depth: int = 0

    def to_dict(self):
        out = {"x": self.x, "kind": self.kind, "evidence_depth": self.evidence_depth}
        if self.kind == "rational":
            out["p"] = self.p
            out["q"] = self.q
        if self.kappa_estimate is not None:
            out["kappa_estimate"] = self.kappa_estimate
        return out


def rationality_verdict(x, q_max, tol):
    """Scan convergents with q <= q_max for one approximating x within tol."""
    x = float(x)
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    cf = continued_fraction(x, max_terms=64, q_cap=q_max)
    depth = len(cf.quotients)
    for p, q in cf.convergents:
        if abs(x - p / q) <= tol:
            return RationalityVerdict(
                x=x, kind="rational", p=p, q=q, evidence_depth=depth
            )
    kappa = None
    if len(cf.convergents) >= 3:
        try:
            kappa = irrationality_exponent_estimate(cf)
        except ValueError:
            kappa = None
    return RationalityVerdict(
        x=x, kind="irrational_like", kappa_estimate=kappa, evidence_depth=depth
    )


def irrationality_exponent_estimate(cf):
    """Growth estimate max(ln q_{n+1} / ln q_n) + 1 over the deepest third
    of the convergent pairs.

    Early pairs with tiny denominators make every number look like a
    Liouville number, so only the deepest third of the usable pairs
    (always at least two) vote.  This is a heuristic signal, never a claim
    about the true exponent.  Needs at least three convergents, and at
    least one pair with denominators >= 2.
    """
    if len(cf.convergents) < 3:
        raise ValueError("need at least three convergents to estimate growth")
    qs = [q for _, q in cf.convergents if q >= 2]
    if len(qs) < 2:
        raise ValueError("denominators too small to estimate growth")
    pairs = [math.log(qs[i + 1]) / math.log(qs[i]) for i in range(len(qs) - 1)]
    keep = max(2, math.ceil(len(pairs) / 3))
    return 1.0 + max(pairs[-keep:])


def count_equidistributed_indices(theta, offset, count, a, b):
    """#{ i < count : frac(offset + i * theta) in (a, b) }, strict interior."""
    count = int(count)
    if count < 0:
        raise ValueError("count must be >= 0")
    a, b = validate_interval(a, b)
    if count == 0:
        return 0
    vals = (float(offset) + float(theta) * np.arange(count)) % 1.0
    return int(np.count_nonzero((vals > a) & (vals < b)))
