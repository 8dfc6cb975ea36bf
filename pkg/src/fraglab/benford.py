"""Significands, mantissas, and weighted mantissa distributions.

Every question about leading digits downstream reduces to a question about
the fractional part of a base-B logarithm: a positive number is Benford in
base B exactly when that fractional part is uniform on [0, 1).  This module
owns the reduction: significand and mantissa extraction, the logarithmic
reference law, and an atomic weighted distribution on the mantissa circle
with interval queries and a Kolmogorov-Smirnov distance from uniformity.

Weights are carried in natural-log scale so that distributions built from
astronomically many tiny atoms (multiplicity / m**N) never leave the
representable range before normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Atoms closer than this are considered the same point; a mantissa this
# close below 1.0 is folded to 0.0 so both ends of the circle agree.
MERGE_TOL = 1e-12


def validate_base(base):
    if not isinstance(base, (int, np.integer)) or isinstance(base, bool):
        raise ValueError(f"base must be an integer, got {base!r}")
    if base < 2:
        raise ValueError(f"base must be >= 2, got {base}")
    return int(base)


def validate_interval(a, b):
    """Check an open mantissa interval (a, b) with 0 <= a < b <= 1."""
    a = float(a)
    b = float(b)
    if not (0.0 <= a < b <= 1.0):
        raise ValueError(f"need 0 <= a < b <= 1, got ({a}, {b})")
    return a, b


def significand(x, base=10):
    """Return s in [1, base) with x = s * base**k for an integer k.

    Raises ValueError for x <= 0 or non-finite x.
    """
    base = validate_base(base)
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise ValueError(f"significand needs a finite x > 0, got {x!r}")
    exponent = math.floor(math.log(x) / math.log(base))
    s = x
    # Scale in bounded chunks so base**chunk never overflows a float even
    # for subnormal inputs, then fix the possible off-by-one from the log.
    e = exponent
    while e > 0:
        step = min(e, 256)
        s /= float(base ** step)
        e -= step
    while e < 0:
        step = min(-e, 256)
        s *= float(base ** step)
        e += step
    while s >= base:
        s /= base
    while s < 1.0:
        s *= base
    return s


def mantissa(x, base=10):
    """Fractional part of log_base(x), folded so values within
    MERGE_TOL of 1.0 collapse to 0.0.

    Raises ValueError for x <= 0 or non-finite x.
    """
    base = validate_base(base)
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise ValueError(f"mantissa needs a finite x > 0, got {x!r}")
    lb = math.log(x) / math.log(base)
    f = lb - math.floor(lb)
    if 1.0 - f <= MERGE_TOL:
        return 0.0
    return f


def fold_unit(values):
    """Vectorized frac(values) with the same fold-back at 1.0 as mantissa()."""
    f = np.asarray(values, dtype=float) % 1.0
    f[1.0 - f <= MERGE_TOL] = 0.0
    return f


def benford_digit_prob(d, base=10):
    """Probability log_base((d+1)/d) of leading digit d under the Benford law."""
    base = validate_base(base)
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool):
        raise ValueError(f"digit must be an integer, got {d!r}")
    if not 1 <= d <= base - 1:
        raise ValueError(f"digit must be in 1..{base - 1}, got {d}")
    return math.log1p(1.0 / d) / math.log(base)


def benford_cdf(s, base=10):
    """Benford CDF of the significand: log_base(s) on [1, base]."""
    base = validate_base(base)
    s = float(s)
    if not 1.0 <= s <= base:
        raise ValueError(f"significand argument must lie in [1, {base}], got {s}")
    return math.log(s) / math.log(base)


@dataclass
class MantissaDistribution:
    """Finite weighted atom set on the mantissa circle [0, 1).

    Built in two phases: accumulate raw atoms (any order, natural-log
    weights, any normalization), then finalize() once.  Finalizing sorts,
    merges atoms within MERGE_TOL of their neighbor, and rescales so the
    linear weights sum to one.  Queries refuse to run before that.
    """

    mantissas: np.ndarray
    log_weights: np.ndarray
    normalized: bool = False
    _total_log_weight: float = field(default=0.0, repr=False)

    @classmethod
    def from_atoms(cls, mantissas, log_weights):
        m = np.asarray(mantissas, dtype=float).ravel()
        lw = np.asarray(log_weights, dtype=float).ravel()
        if m.shape != lw.shape:
            raise ValueError("mantissas and log_weights must have equal length")
        if m.size == 0:
            raise ValueError("distribution needs at least one atom")
        if np.any((m < 0.0) | (m >= 1.0)):
            raise ValueError("mantissas must lie in [0, 1)")
        return cls(mantissas=m, log_weights=lw, normalized=False)

    def finalize(self):
        """Sort, merge near-duplicate atoms, normalize.  Idempotent."""
        if self.normalized:
            return self
        order = np.argsort(self.mantissas, kind="stable")
        m = self.mantissas[order]
        lw = self.log_weights[order]
        # Split into groups wherever the gap to the previous atom exceeds
        # the tolerance; chains of sub-tolerance gaps merge transitively.
        if m.size > 1:
            new_group = np.empty(m.size, dtype=bool)
            new_group[0] = True
            new_group[1:] = np.diff(m) > MERGE_TOL
            starts = np.flatnonzero(new_group)
        else:
            starts = np.array([0])
        # Per-group max shift: a global shift would underflow atoms far
        # below the heaviest one and zero out entire groups.
        group_shift = np.maximum.reduceat(lw, starts)
        counts = np.diff(np.append(starts, lw.size))
        w = np.exp(lw - np.repeat(group_shift, counts))
        group_w = np.add.reduceat(w, starts)
        group_mw = np.add.reduceat(w * m, starts)
        merged_m = group_mw / group_w
        merged_lw = np.log(group_w) + group_shift
        top = merged_lw.max()
        total = float(np.log(np.exp(merged_lw - top).sum()) + top)
        self.mantissas = fold_unit(merged_m)
        self.log_weights = merged_lw - total
        self._total_log_weight = total
        self.normalized = True
        return self

    def _require_normalized(self):
        if not self.normalized:
            raise RuntimeError("distribution must be finalize()d before querying")

    @property
    def weights(self):
        """Linear-scale weights; only meaningful after finalize()."""
        self._require_normalized()
        return np.exp(self.log_weights)

    def interval_mass(self, a, b):
        """Total weight strictly inside the open interval (a, b)."""
        self._require_normalized()
        a, b = validate_interval(a, b)
        inside = (self.mantissas > a) & (self.mantissas < b)
        if not inside.any():
            return 0.0
        return float(np.exp(self.log_weights[inside]).sum())

    def ks_to_benford(self):
        """Sup distance between the atomic mantissa CDF and the uniform CDF.

        Evaluated at every jump point from both sides, which is where the
        supremum of a step-function-minus-identity must occur.
        """
        self._require_normalized()
        c = np.cumsum(np.exp(self.log_weights))
        c_before = np.concatenate(([0.0], c[:-1]))
        t = self.mantissas
        return float(max(np.abs(c - t).max(), np.abs(c_before - t).max()))

    def write_csv(self, fileobj):
        """Write 'mantissa,weight' rows, linear weights, 17 significant digits."""
        self._require_normalized()
        fileobj.write("mantissa,weight\n")
        for m, w in zip(self.mantissas, np.exp(self.log_weights)):
            fileobj.write(f"{m:.17g},{w:.17g}\n")

    @classmethod
    def read_csv(cls, fileobj):
        header = fileobj.readline().strip()
        if header != "mantissa,weight":
            raise ValueError(f"unexpected CSV header {header!r}")
        ms, ws = [], []
        for line in fileobj:
            line = line.strip()
            if not line:
                continue
            m_str, w_str = line.split(",")
            ms.append(float(m_str))
            ws.append(float(w_str))
        dist = cls.from_atoms(np.array(ms), np.log(np.array(ws)))
        return dist.finalize()
