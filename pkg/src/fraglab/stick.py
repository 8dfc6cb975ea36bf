"""Exact and truncated mantissa statistics for multi-proportion stick cutting.

A stick of length 1 is cut into m pieces with fixed proportions p_1..p_m at
every stage.  After N stages the piece lengths are the products
p_1**k_1 * ... * p_m**k_m over compositions (k_1..k_m) of N, each carried by
multinomial(N; k) of the m**N sticks.  The exact engine enumerates the
compositions; the brute-force oracle expands the tree stick by stick; the
truncated estimator reproduces the two-cut block scheme whose error terms
the analysis controls: a short-prefix cut on k_1 + k_2, a Chebyshev window
around the central binomial, and constant-weight blocks of consecutive k_1
values priced at the block-start binomial.

All mass bookkeeping happens in natural-log scale; mantissas live in base B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .benford import MantissaDistribution, fold_unit, validate_base, validate_interval
from .errors import CapacityError

DEFAULT_TERM_BUDGET = 10 ** 7
_CHUNK_ROWS = 1 << 19

# Marker returned by predicted_error_exponent when the exponent estimate
# carries no power law (infinite-irrationality-measure direction).
SUBPOLYNOMIAL = "o(1)"

PROPORTION_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ProportionVector:
    """Cut proportions p_1..p_m, each in (0, 1), summing to 1."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(float(x) for x in self.parts)
        if len(parts) < 2:
            raise ValueError("need at least two proportions")
        for x in parts:
            if not (0.0 < x < 1.0):
                raise ValueError(f"each proportion must lie in (0, 1), got {x}")
        if abs(sum(parts) - 1.0) > PROPORTION_SUM_TOL:
            raise ValueError(f"proportions must sum to 1, got {sum(parts)!r}")
        object.__setattr__(self, "parts", parts)

    @property
    def m(self):
        return len(self.parts)

    def log_parts(self, base):
        """Base-`base` logs of the proportions, as an ndarray."""
        validate_base(base)
        return np.log(np.array(self.parts)) / math.log(base)


def as_proportions(p):
    if isinstance(p, ProportionVector):
        return p
    return ProportionVector(tuple(p))


# ---------------------------------------------------------------------------
# Composition enumeration, colexicographic.
# ---------------------------------------------------------------------------

def composition_count(total, parts):
    """Number of compositions of `total` into `parts` nonnegative parts."""
    if parts < 1 or total < 0:
        raise ValueError("need parts >= 1 and total >= 0")
    return math.comb(total + parts - 1, parts - 1)


def compositions(total, parts):
    """Yield compositions of `total` into `parts` nonnegative integers in
    colexicographic order (last coordinate varies slowest)."""
    if parts < 1 or total < 0:
        raise ValueError("need parts >= 1 and total >= 0")
    if parts == 1:
        yield (total,)
        return
    for last in range(total + 1):
        for head in compositions(total - last, parts - 1):
            yield head + (last,)


def composition_rank(comp):
    """Colexicographic rank of a composition, inverse of composition_from_rank."""
    comp = tuple(int(k) for k in comp)
    if any(k < 0 for k in comp):
        raise ValueError("composition parts must be nonnegative")
    total = sum(comp)
    rank = 0
    parts = len(comp)
    while parts > 1:
        last = comp[parts - 1]
        for v in range(last):
            rank += composition_count(total - v, parts - 1)
        total -= last
        parts -= 1
    return rank


def composition_from_rank(rank, total, parts):
    """Composition of `total` into `parts` parts at colexicographic `rank`."""
    if not 0 <= rank < composition_count(total, parts):
        raise ValueError(f"rank {rank} out of range")
    out = []
    while parts > 1:
        v = 0
        while True:
            block = composition_count(total - v, parts - 1)
            if rank < block:
                break
            rank -= block
            v += 1
        out.append(v)
        total -= v
        parts -= 1
    out.append(total)
    return tuple(reversed(out))


def _composition_array(total, parts):
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for last in range(total + 1):
        head = _composition_array(total - last, parts - 1)
        col = np.full((head.shape[0], 1), last, dtype=np.int64)
        blocks.append(np.hstack([head, col]))
    return np.vstack(blocks)


def _composition_chunks(total, parts, cap=_CHUNK_ROWS):
    """Yield composition arrays in colex order, each at most ~cap rows."""
    if parts == 1 or composition_count(total, parts) <= cap:
        yield _composition_array(total, parts)
        return
    for last in range(total + 1):
        for head in _composition_chunks(total - last, parts - 1, cap):
            col = np.full((head.shape[0], 1), last, dtype=np.int64)
            yield np.hstack([head, col])


# ---------------------------------------------------------------------------
# Multinomial weights.
# ---------------------------------------------------------------------------

def multinomial_int(comp):
    """Exact integer multinomial coefficient of a composition."""
    comp = tuple(int(k) for k in comp)
    if any(k < 0 for k in comp):
        raise ValueError("composition parts must be nonnegative")
    out = math.factorial(sum(comp))
    for k in comp:
        out //= math.factorial(k)
    return out


def log_multinomial(comp):
    """Natural log of the multinomial coefficient.

    Exact integer arithmetic for N <= 20, log-gamma beyond; the crossover
    keeps small cases bit-reproducible against combinatorial identities.
    """
    comp = tuple(int(k) for k in comp)
    total = sum(comp)
    if total <= 20:
        return math.log(multinomial_int(comp))
    ks = np.array(comp, dtype=float)
    return float(gammaln(total + 1.0) - gammaln(ks + 1.0).sum())


def _log_multinomial_rows(karr):
    total = karr.sum(axis=1).astype(float)
    return gammaln(total + 1.0) - gammaln(karr.astype(float) + 1.0).sum(axis=1)


def verify_multinomial_factorization(comp):
    """Check multinomial(N; k) == prod_i C(k_1+...+k_i, k_i), in exact integers."""
    comp = tuple(int(k) for k in comp)
    prefix = 0
    prod = 1
    for k in comp:
        prefix += k
        prod *= math.comb(prefix, k)
    return prod == multinomial_int(comp)


def verify_power_identity(N, m):
    """Check m**N against the two composition sums, in exact integers:
    the plain multinomial sum over m parts, and the 2**k_1-weighted
    multinomial sum over m-1 parts (for m >= 2)."""
    if N < 0 or m < 1:
        raise ValueError("need N >= 0 and m >= 1")
    target = m ** N
    plain = sum(multinomial_int(c) for c in compositions(N, m))
    if plain != target:
        return False
    if m >= 2:
        folded = sum(
            2 ** c[0] * multinomial_int(c) for c in compositions(N, m - 1)
        )
        if folded != target:
            return False
    return True


# ---------------------------------------------------------------------------
# Exact engine and brute-force oracle.
# ---------------------------------------------------------------------------

def stick_log_length(p, comp, base=10):
    """Base-`base` log length of the stick indexed by a composition."""
    p = as_proportions(p)
    comp = tuple(int(k) for k in comp)
    if len(comp) != p.m:
        raise ValueError("composition length must match the number of proportions")
    return float(np.dot(np.array(comp, dtype=float), p.log_parts(base)))


def ratio_exponents(p, base=10):
    """Logs log_base(p_i / p_{i+1}) of adjacent proportion ratios.

    The mantissa orbit within each merged-prefix family is an arithmetic
    progression with one of these as its step; irrationality of any of them
    is what separates the equidistributed regime from the degenerate one.
    """
    p = as_proportions(p)
    logs = p.log_parts(base)
    return [float(logs[i] - logs[i + 1]) for i in range(p.m - 1)]


def _term_chunks(p, N, base, budget):
    p = as_proportions(p)
    total = composition_count(N, p.m)
    if total > budget:
        raise CapacityError(
            f"{total} composition terms exceed the term budget {budget}"
        )
    logb = p.log_parts(base)
    log_norm = N * math.log(p.m)
    for karr in _composition_chunks(N, p.m):
        logw = _log_multinomial_rows(karr) - log_norm
        man = fold_unit(karr.astype(float) @ logb)
        yield man, logw


def exact_mantissa_distribution(p, N, base=10, budget=DEFAULT_TERM_BUDGET):
    """Full stage-N mantissa distribution via composition enumeration.

    One atom per composition before merging; weight multinomial / m**N.
    Raises CapacityError when the composition count exceeds `budget`.
    """
    validate_base(base)
    if N < 0:
        raise ValueError("N must be >= 0")
    mans, logws = [], []
    for man, logw in _term_chunks(p, N, base, budget):
        mans.append(man)
        logws.append(logw)
    return MantissaDistribution.from_atoms(
        np.concatenate(mans), np.concatenate(logws)
    ).finalize()


def exact_interval_probability(p, N, a, b, base=10, budget=DEFAULT_TERM_BUDGET):
    """Fraction of stage-N sticks (stick counting) with mantissa in (a, b).

    Streams over composition chunks with log-sum-exp accumulation, so the
    term count, not the atom weights' dynamic range, is the only limit.
    """
    validate_base(base)
    a, b = validate_interval(a, b)
    if N < 0:
        raise ValueError("N must be >= 0")
    pieces = []
    for man, logw in _term_chunks(p, N, base, budget):
        inside = (man > a) & (man < b)
        if inside.any():
            pieces.append(logsumexp(logw[inside]))
    if not pieces:
        return 0.0
    return float(np.exp(logsumexp(pieces)))


def brute_force_mantissa(p, N, base=10, budget=DEFAULT_TERM_BUDGET):
    """Oracle: expand the fragmentation tree stick by stick.

    Keeps all m**N log lengths with equal weight m**-N and merges at the
    end.  Independent of the composition engine by construction; only
    feasible while m**N <= budget.
    """
    p = as_proportions(p)
    validate_base(base)
    if N < 0:
        raise ValueError("N must be >= 0")
    count = p.m ** N
    if count > budget:
        raise CapacityError(f"m**N = {count} sticks exceed the budget {budget}")
    logb = p.log_parts(base)
    lengths = np.zeros(1)
    for _ in range(N):
        lengths = (lengths[:, None] + logb[None, :]).ravel()
    log_w = np.full(lengths.size, -N * math.log(p.m))
    return MantissaDistribution.from_atoms(fold_unit(lengths), log_w).finalize()


# ---------------------------------------------------------------------------
# Truncated block estimator.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncationParams:
    """Cut exponents: drop k_1+k_2 below N**epsilon, block size ceil(N**delta).

    delta must sit strictly inside (0, epsilon/10); that headroom is what
    makes the within-block binomial variation asymptotically negligible.
    """

    epsilon: float
    delta: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0.0 < self.delta < self.epsilon / 10.0:
            raise ValueError(
                f"delta must lie in (0, epsilon/10) = (0, {self.epsilon / 10}), "
                f"got {self.delta}"
            )


@dataclass(frozen=True)
class TruncatedResult:
    """Truncated estimate plus its explicit error budget.

    dropped_mass_bound = epsilon_cut_bound + chebyshev_bound; the block
    error (within-block binomial variation priced at adjacent block-start
    differences) is reported separately because it bounds estimation error
    on the kept mass rather than mass that was dropped.
    """

    value: float
    dropped_mass_bound: float
    blocks_used: int
    epsilon_cut_bound: float
    chebyshev_bound: float
    block_error_bound: float


def truncated_estimate(p, N, a, b, params, base=10):
    """Block-truncated estimate of the stage-N interval probability.

    Merges k_1 and k_2 into k, keeps outer compositions with k >= N**epsilon
    (for m >= 3; m = 2 has k = N fixed), keeps inner indices within the
    Chebyshev window |k_1 - k/2| < ceil(N**delta) * sqrt(k)/2, and prices
    each block of ceil(N**delta) consecutive k_1 values at its block-start
    binomial.  Block starts use ceil(k/2) for blocks right of center and
    floor(k/2) for blocks left of center; for odd k the one center value
    that convention leaves unblocked is evaluated exactly.
    """
    p = as_proportions(p)
    validate_base(base)
    a, b = validate_interval(a, b)
    if not isinstance(params, TruncationParams):
        raise ValueError("params must be a TruncationParams")
    if N < 1:
        raise ValueError("N must be >= 1")
    m = p.m
    q = math.ceil(N ** params.delta)
    eps_threshold = N ** params.epsilon
    logb = p.log_parts(base)
    step = float(logb[0] - logb[1])
    log_norm = N * math.log(m)

    if m >= 3:
        # Mass of all sticks with k_1 + k_2 below the cut: the short-prefix
        # count bound (m-2)**N * N**(N**eps + 2), normalized by m**N.
        log_eps = N * math.log(m - 2) + (eps_threshold + 2.0) * math.log(N) - log_norm
        epsilon_cut_bound = float(min(1.0, math.exp(min(0.0, log_eps))))
    else:
        epsilon_cut_bound = 0.0
    chebyshev_bound = 1.0 / q ** 2

    value = 0.0
    block_error = 0.0
    blocks_used = 0
    offsets = np.arange(q)

    for outer in compositions(N, m - 1):
        k = outer[0]
        if m >= 3 and k < eps_threshold:
            continue
        log_mult_outer = log_multinomial(outer)
        base_weight = log_mult_outer - log_norm
        shift = float(k * logb[1] + np.dot(np.array(outer[1:], dtype=float), logb[2:]))
        half = 0.5 * k
        window = q * math.sqrt(k) / 2.0
        n_blocks = math.ceil(math.sqrt(k) / 2.0)
        for ell in range(-n_blocks, n_blocks + 1):
            start = (math.ceil(half) if ell >= 0 else math.floor(half)) + ell * q
            k1 = start + offsets
            kept = k1[(k1 >= 0) & (k1 <= k) & (np.abs(k1 - half) < window)]
            if kept.size == 0:
                continue
            blocks_used += 1
            s_eff = min(max(start, 0), k)
            w_block = math.exp(base_weight + _log_binomial(k, s_eff))
            man = fold_unit(shift + kept * step)
            hits = int(np.count_nonzero((man > a) & (man < b)))
            value += w_block * hits
            neighbor = start + q if ell >= 0 else start - q
            n_eff = min(max(neighbor, 0), k)
            w_next = math.exp(base_weight + _log_binomial(k, n_eff))
            block_error += kept.size * abs(w_block - w_next)
        if k % 2 == 1:
            center = k // 2
            if abs(center - half) < window:
                man = fold_unit(np.array([shift + center * step]))[0]
                if a < man < b:
                    value += math.exp(base_weight + _log_binomial(k, center))

    value = min(max(value, 0.0), 1.0)
    return TruncatedResult(
        value=value,
        dropped_mass_bound=epsilon_cut_bound + chebyshev_bound,
        blocks_used=blocks_used,
        epsilon_cut_bound=epsilon_cut_bound,
        chebyshev_bound=chebyshev_bound,
        block_error_bound=block_error,
    )


def _log_binomial(n, k):
    return float(
        gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
    )


def adjacent_binomial_ratio(kN, ell, delta_block):
    """Ratio of binomial weights at consecutive block starts.

    With q = delta_block, returns
    C(kN, kN/2 + (ell+1) q) / C(kN, kN/2 + ell q), equal to the factorial
    ratio ((kN/2 + ell q)! (kN/2 - ell q)!) / ((kN/2 + (ell+1) q)! (kN/2 -
    (ell+1) q)!).  Computed in log space and exponentiated.  kN must be
    even and all four indices must stay inside [0, kN].
    """
    kN = int(kN)
    ell = int(ell)
    q = int(delta_block)
    if kN < 0 or kN % 2 != 0:
        raise ValueError(f"kN must be even and nonnegative, got {kN}")
    if q < 0:
        raise ValueError(f"delta_block must be >= 0, got {q}")
    half = kN // 2
    idx = (half + ell * q, half - ell * q, half + (ell + 1) * q, half - (ell + 1) * q)
    if any(i < 0 or i > kN for i in idx):
        raise ValueError("block offsets leave the index range [0, kN]")
    log_alpha = (
        gammaln(idx[0] + 1.0)
        + gammaln(idx[1] + 1.0)
        - gammaln(idx[2] + 1.0)
        - gammaln(idx[3] + 1.0)
    )
    return float(np.exp(log_alpha))


def predicted_error_exponent(kappa, delta, eps_prime):
    """Power-law exponent of the per-block equidistribution error after
    normalizing by the block length.

    For finite irrationality measure kappa the count error in a block of
    length L is O(L**(1 - 1/kappa + eps_prime)), so the normalized error
    decays like N**(delta * (-1/kappa + eps_prime)); eps_prime must be small
    enough to keep that exponent negative.  For kappa = inf no power law is
    claimed and the o(1) marker is returned.
    """
    if isinstance(kappa, str):
        raise ValueError("kappa must be a number or math.inf")
    if kappa != kappa or kappa < 1.0:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if eps_prime < 0.0:
        raise ValueError(f"eps_prime must be >= 0, got {eps_prime}")
    if math.isinf(kappa):
        return SUBPOLYNOMIAL
    rate = -1.0 / kappa + eps_prime
    if rate >= 0.0:
        raise ValueError(
            f"eps_prime = {eps_prime} does not keep the exponent negative "
            f"for kappa = {kappa}"
        )
    return delta * rate
