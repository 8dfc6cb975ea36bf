"""Monte Carlo box fragmentation: independent per-axis multiplicative cuts.

An m-dimensional box starts as the unit cube; at every stage each axis is
rescaled by an independent draw from the cut distribution.  After N stages
the log side lengths are sums of N i.i.d. draws, so the d-volume and
largest-d-face statistics are smooth functions of an m-vector of random
walks.  Everything is parameterized by the base-B log scale in which the
mantissa question is asked.

Randomness is counter based: trial t draws from a Philox stream keyed by
(seed, t), so any chunking of the trial range, including across worker
threads, reproduces the same draws.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma, logsumexp, polygamma

from .benford import MantissaDistribution, fold_unit, validate_base
from .errors import ConfigError

CUT_KINDS = ("log_uniform", "beta", "fixed", "table")
STATISTIC_KINDS = ("vol_d", "max_face", "z_vector")


@dataclass(frozen=True)
class CutDistribution:
    """One multiplicative cut factor P > 0, with its base-B log moments.

    mu_P and sigma_P are the mean and standard deviation of log_B P;
    support_bound is the smallest C with |log_B P| <= C almost surely
    (math.inf when the log support is unbounded, as for the beta kind).
    """

    kind: str
    base: int
    params: tuple
    mu_P: float = field(init=False)
    sigma_P: float = field(init=False)
    support_bound: float = field(init=False)

    def __post_init__(self):
        validate_base(self.base)
        if self.kind not in CUT_KINDS:
            raise ConfigError(f"unknown cut kind {self.kind!r}")
        mu, sigma, bound = self._moments()
        object.__setattr__(self, "mu_P", mu)
        object.__setattr__(self, "sigma_P", sigma)
        object.__setattr__(self, "support_bound", bound)

    # -- constructors -------------------------------------------------

    @classmethod
    def log_uniform(cls, lo, hi, base=10):
        """log_B P uniform on (lo, hi)."""
        lo, hi = float(lo), float(hi)
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
            raise ConfigError(f"need finite lo < hi, got ({lo}, {hi})")
        return cls(kind="log_uniform", base=base, params=(lo, hi))

    @classmethod
    def beta(cls, alpha, beta_, base=10):
        """P beta distributed on (0, 1); log support unbounded below."""
        alpha, beta_ = float(alpha), float(beta_)
        if alpha <= 0 or beta_ <= 0:
            raise ConfigError("beta shape parameters must be positive")
        return cls(kind="beta", base=base, params=(alpha, beta_))

    @classmethod
    def fixed(cls, p, base=10):
        """Degenerate cut, always the factor p.  sigma_P is zero."""
        p = float(p)
        if not (p > 0 and math.isfinite(p)):
            raise ConfigError(f"fixed cut factor must be positive, got {p}")
        return cls(kind="fixed", base=base, params=(p,))

    @classmethod
    def table(cls, values, weights, base=10):
        """Discrete cut factors with the given relative weights."""
        values = tuple(float(v) for v in values)
        weights = tuple(float(w) for w in weights)
        if not values or len(values) != len(weights):
            raise ConfigError("table needs matching nonempty values and weights")
        if any(not (v > 0 and math.isfinite(v)) for v in values):
            raise ConfigError("table values must be positive and finite")
        if any(w < 0 or not math.isfinite(w) for w in weights):
            raise ConfigError("table weights must be nonnegative and finite")
        if sum(weights) <= 0:
            raise ConfigError("table weights must have positive total")
        return cls(kind="table", base=base, params=(values, weights))

    # -- moments and sampling -----------------------------------------

    def _moments(self):
        ln_b = math.log(self.base)
        if self.kind == "log_uniform":
            lo, hi = self.params
            return (lo + hi) / 2.0, (hi - lo) / math.sqrt(12.0), max(abs(lo), abs(hi))
        if self.kind == "beta":
            alpha, beta_ = self.params
            mean_ln = digamma(alpha) - digamma(alpha + beta_)
            var_ln = polygamma(1, alpha) - polygamma(1, alpha + beta_)
            return mean_ln / ln_b, math.sqrt(var_ln) / ln_b, math.inf
        if self.kind == "fixed":
            (p,) = self.params
            return math.log(p) / ln_b, 0.0, abs(math.log(p) / ln_b)
        values, weights = self.params
        w = np.array(weights) / sum(weights)
        logs = np.log(np.array(values)) / ln_b
        mu = float(np.dot(w, logs))
        var = float(np.dot(w, (logs - mu) ** 2))
        return mu, math.sqrt(var), float(np.abs(logs).max())

    def sample_log(self, stream, size=None):
        """Draw log_B P."""
        if self.kind == "log_uniform":
            lo, hi = self.params
            return stream.uniform(lo, hi, size=size)
        if self.kind == "beta":
            alpha, beta_ = self.params
            draws = stream.beta(alpha, beta_, size=size)
            return np.log(draws) / math.log(self.base)
        if self.kind == "fixed":
            (p,) = self.params
            val = math.log(p) / math.log(self.base)
            return val if size is None else np.full(size, val)
        values, weights = self.params
        w = np.array(weights) / sum(weights)
        logs = np.log(np.array(values)) / math.log(self.base)
        idx = stream.choice(len(logs), size=size, p=w)
        return logs[idx]

    def sample(self, stream, size=None):
        """Draw P itself, linear scale."""
        return np.asarray(self.base, dtype=float) ** self.sample_log(stream, size)


def sample_cut(dist, stream):
    """One linear-scale cut factor from the given random stream."""
    out = dist.sample(stream)
    return float(out)


@dataclass(frozen=True)
class ProcessConfig:
    """Full description of one box fragmentation Monte Carlo run."""

    m: int
    N: int
    cut: CutDistribution
    base: int
    trials: int
    seed: int
    statistic: str
    d: int | None = None

    def __post_init__(self):
        validate_base(self.base)
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if self.statistic not in STATISTIC_KINDS:
            raise ConfigError(f"unknown statistic {self.statistic!r}")
        if self.statistic == "z_vector":
            if self.d is not None:
                raise ConfigError("z_vector takes no dimension parameter")
        else:
            if self.d is None or not 1 <= self.d <= self.m:
                raise ConfigError(f"d must lie in 1..m = 1..{self.m}, got {self.d}")
        if self.cut.base != self.base:
            raise ConfigError(
                f"cut is parameterized in base {self.cut.base}, config says {self.base}"
            )
        if not math.isfinite(self.cut.support_bound):
            raise ConfigError(
                "cut distributions with unbounded log support are not accepted "
                "in experiment configs"
            )


def trial_stream(seed, trial_index):
    """Counter-based random stream for one trial: Philox keyed by (seed, t)."""
    key = np.array([seed, trial_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def cut_matrix(cfg, trial_index):
    """All base-B log cut factors of one trial, shape (N, m), stage major."""
    stream = trial_stream(cfg.seed, trial_index)
    return np.asarray(
        cfg.cut.sample_log(stream, size=(cfg.N, cfg.m)), dtype=float
    )


def simulate_log_sides(cfg, trial_index):
    """Final base-B log side lengths of one trial, shape (m,)."""
    return cut_matrix(cfg, trial_index).sum(axis=0)


def z_statistic(log_sides, cut, N):
    """Per-axis normalized log sides (x - N mu_P) / (sqrt(N) sigma_P)."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if cut.sigma_P <= 0.0:
        raise ValueError("z statistic needs a cut with sigma_P > 0")
    x = np.asarray(log_sides, dtype=float)
    return (x - N * cut.mu_P) / (math.sqrt(N) * cut.sigma_P)


# ---------------------------------------------------------------------------
# Geometry of the fragmented box.
# ---------------------------------------------------------------------------

def elementary_symmetric(values, d):
    """e_0..e_d of the given values, by the one-pass product recurrence."""
    values = np.asarray(values, dtype=float)
    if d < 0:
        raise ValueError("d must be >= 0")
    e = np.zeros(d + 1)
    e[0] = 1.0
    for x in values:
        # descending update keeps each e_j free of the current x
        for j in range(d, 0, -1):
            e[j] += x * e[j - 1]
    return e


def vol_d_log(log_sides, d, base=10):
    """log_B of the total d-volume 2**(m-d) * e_d(sides).

    The largest side is factored out before forming e_d, so the linear
    evaluation stays inside float range no matter how large the random
    walk excursion is; if every surviving summand underflows, the top-d
    monomial (which dominates the sum) stands in for it.
    """
    validate_base(base)
    ls = np.asarray(log_sides, dtype=float)
    m = ls.size
    if not 1 <= d <= m:
        raise ValueError(f"d must lie in 1..m = 1..{m}, got {d}")
    ln_b = math.log(base)
    shift = float(ls.max())
    scaled = np.exp((ls - shift) * ln_b)
    e_d = elementary_symmetric(scaled, d)[d]
    face_factor = (m - d) * math.log(2.0) / ln_b
    if e_d <= 0.0:
        top = np.sort(ls)[m - d:]
        return face_factor + float(top.sum())
    return face_factor + d * shift + math.log(e_d) / ln_b


def vol_d(log_sides, d, base=10):
    """Total d-volume, linear scale.  Overflows to inf for extreme walks;
    use vol_d_log when only the mantissa matters."""
    return float(base) ** vol_d_log(log_sides, d, base)


def vol_d_bruteforce(log_sides, d, base=10):
    """Oracle for vol_d: explicit sum over all d-subsets of the sides."""
    validate_base(base)
    ls = np.asarray(log_sides, dtype=float)
    m = ls.size
    if not 1 <= d <= m:
        raise ValueError(f"d must lie in 1..m = 1..{m}, got {d}")
    ln_b = math.log(base)
    subset_logs = [
        sum(ls[i] for i in idx) * ln_b for idx in itertools.combinations(range(m), d)
    ]
    log_e = logsumexp(subset_logs)
    return float(math.exp((m - d) * math.log(2.0) + log_e))


def max_face_volume(log_sides, d):
    """log of the largest d-face: sum of the d largest log sides.

    Selection by partition, then a canonical ascending-order sum so the
    result is bitwise identical to sorting and summing the top block.
    """
    ls = np.asarray(log_sides, dtype=float)
    m = ls.size
    if not 1 <= d <= m:
        raise ValueError(f"d must lie in 1..m = 1..{m}, got {d}")
    top = np.partition(ls, m - d)[m - d:]
    return float(np.sort(top).sum())


# ---------------------------------------------------------------------------
# Monte Carlo drivers.
# ---------------------------------------------------------------------------

def _worker_count():
    raw = os.environ.get("FRAGLAB_THREADS", "")
    try:
        n = int(raw) if raw else 1
    except ValueError:
        n = 1
    return max(1, n)


def _mantissa_chunk(cfg, start, stop):
    out = np.empty(stop - start)
    for t in range(start, stop):
        ls = simulate_log_sides(cfg, t)
        if cfg.statistic == "vol_d":
            val = vol_d_log(ls, cfg.d, cfg.base)
        else:
            val = max_face_volume(ls, cfg.d)
        out[t - start] = val
    return fold_unit(out)


def monte_carlo_mantissa(cfg):
    """Equal-weight mantissa distribution of the configured statistic.

    Deterministic for a fixed config at any FRAGLAB_THREADS setting: each
    trial owns a counter-based stream and chunks are concatenated in trial
    order before the merge.
    """
    if cfg.statistic == "z_vector":
        raise ValueError(
            "z_vector is not a mantissa statistic; use simulate_z_matrix"
        )
    workers = _worker_count()
    bounds = np.linspace(0, cfg.trials, min(workers, cfg.trials) * 4 + 1).astype(int)
    spans = [
        (int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a
    ]
    if workers == 1:
        chunks = [_mantissa_chunk(cfg, a, b) for a, b in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda s: _mantissa_chunk(cfg, *s), spans))
    mans = np.concatenate(chunks)
    log_w = np.full(cfg.trials, -math.log(cfg.trials))
    return MantissaDistribution.from_atoms(mans, log_w).finalize()


def simulate_z_matrix(cfg):
    """Normalized log sides of every trial, shape (trials, m)."""
    out = np.empty((cfg.trials, cfg.m))
    for t in range(cfg.trials):
        out[t] = z_statistic(simulate_log_sides(cfg, t), cfg.cut, cfg.N)
    return out
