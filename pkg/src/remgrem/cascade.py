"""Poisson point process with intensity e^{-y} dy, its weights, and nested cascades.

Points are generated from exponential arrivals: with S_k = E_1 + ... + E_k,
y_k = -ln S_k are the K largest points of the process, exactly in law. The
weight of point k at parameter m is e^{y_k/m} = S_k^{-1/m}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special, stats

from .bounds import VariationalPoint
from .model import CapacityError, GremParams, ParameterError
from .rng import derive_seed, generator

MAX_LEAVES = 1 << 24
BATCH_ELEMENTS = 1 << 22


class TailTooLargeError(RuntimeError):
    """The truncated weight sum misses more than the requested relative mass."""


@dataclass(frozen=True)
class PppRealization:
    points: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        y = np.array(self.points, dtype=float)
        if y.ndim != 1 or y.size == 0:
            raise ParameterError("need a nonempty 1-d array of points")
        if np.any(np.diff(y) >= 0):
            raise ParameterError("points must be strictly decreasing")
        y.setflags(write=False)
        object.__setattr__(self, "points", y)

    @property
    def K(self) -> int:
        return self.points.size

    @property
    def arrivals(self) -> np.ndarray:
        """S_k = e^{-y_k}."""
        return np.exp(-self.points)


def sample_ppp(K: int, seed: int) -> PppRealization:
    if K < 1:
        raise ParameterError(f"K must be >= 1, got {K}")
    S = np.cumsum(generator(seed, 0).standard_exponential(K))
    return PppRealization(-np.log(S), seed)


def log_tail(log_s: np.ndarray | float, m: float) -> np.ndarray | float:
    """ln of the integral of s^{-1/m} from S to infinity, given ln S.

    This is also the exact conditional mean of the weights beyond the K-th
    point, since the arrivals past S_K form a unit-rate process on (S_K, inf).
    """
    return (1 - 1 / m) * log_s - math.log(1 / m - 1)


@dataclass(frozen=True)
class WeightSum:
    partial: float
    tail: float
    rel_tol: float

    @property
    def flagged(self) -> bool:
        return self.tail > self.rel_tol * self.partial


def weight_sum(ppp: PppRealization, m: float, rel_tol: float = 1e-6, strict: bool = False) -> WeightSum:
    """Truncated sum of e^{y_k/m} with the integral estimate of the omitted tail."""
    if not 0 < m < 1:
        raise ParameterError(f"m must lie in (0, 1), got {m}")
    partial = math.exp(special.logsumexp(ppp.points / m))
    tail = math.exp(log_tail(-ppp.points[-1], m))
    out = WeightSum(partial, tail, rel_tol)
    if strict and out.flagged:
        raise TailTooLargeError(f"tail {tail:.3g} exceeds {rel_tol:g} of partial sum {partial:.3g} at K={ppp.K}")
    return out


def required_truncation(m: float, rel_tol: float) -> float:
    """Typical K at which the tail estimate falls to rel_tol of the sum.

    Uses S_K ~ K and a typical partial sum of zeta(1/m); returned as a float
    because it overflows any practical integer for m close to 1.
    """
    if not 0 < m < 1:
        raise ParameterError(f"m must lie in (0, 1), got {m}")
    typical = special.zeta(1 / m)
    log_k = (math.log(rel_tol * typical) + math.log(1 / m - 1)) / (1 - 1 / m)
    return math.exp(min(log_k, 700.0))


# distributions for the marks f


@dataclass(frozen=True)
class Constant:
    value: float

    cost = 1

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return np.full(size, float(self.value))

    def log_c(self, m: float) -> float:
        return float(self.value)

    def log_mean_exp(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class Gaussian:
    mean: float
    var: float

    cost = 1

    def __post_init__(self):
        if self.var < 0:
            raise ParameterError(f"variance must be >= 0, got {self.var}")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.mean + math.sqrt(self.var) * rng.standard_normal(size)

    def log_c(self, m: float) -> float:
        return self.mean + m * self.var / 2

    def log_mean_exp(self) -> float:
        return self.mean + self.var / 2


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    cost = 1

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ParameterError(f"need lo < hi, got {self.lo}, {self.hi}")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size)

    def _log_mgf(self, t: float) -> float:
        # ln E e^{t f} = t lo + ln((e^{t w} - 1) / (t w)), w = hi - lo
        x = t * (self.hi - self.lo)
        return t * self.lo + math.log(math.expm1(x) / x)

    def log_c(self, m: float) -> float:
        return self._log_mgf(m) / m

    def log_mean_exp(self) -> float:
        return self._log_mgf(1.0)


@dataclass(frozen=True)
class RemLogPartition:
    """f = ln Z_N(beta) of an independent REM sample of size N.

    E[e^{mf}] = E[Z^m] has no closed form, so c is estimated once by Monte
    Carlo from an independent stream (``mc_samples`` draws).
    """

    N: int
    beta: float
    mc_samples: int = 200_000
    mc_seed: int = 2024
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def cost(self) -> int:
        return 1 << self.N

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        shape = (size,) if np.isscalar(size) else tuple(size)
        x = rng.standard_normal(shape + (1 << self.N,))
        return special.logsumexp(-self.beta * math.sqrt(self.N / 2) * x, axis=-1)

    def log_c(self, m: float) -> float:
        if m not in self._cache:
            rng = generator(self.mc_seed, self.N)
            chunks = []
            remaining = self.mc_samples
            while remaining:
                size = min(remaining, max(BATCH_ELEMENTS // self.cost, 1))
                chunks.append(m * self.sample(rng, size))
                remaining -= size
            lz = np.concatenate(chunks)
            self._cache[m] = (special.logsumexp(lz) - math.log(lz.size)) / m
        return self._cache[m]

    def log_mean_exp(self) -> float:
        return self.N * math.log(2.0) + self.N * self.beta**2 / 4


@dataclass(frozen=True)
class InvarianceReport:
    m: float
    ks: float
    pvalue: float
    log_c: float
    K: int
    trials: int
    flagged_fraction: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.ks < self.threshold

    @property
    def tail_clear(self) -> bool:
        return self.flagged_fraction == 0.0


def _log_sums(rng: np.random.Generator, rows: int, K: int, m: float):
    S = np.cumsum(rng.standard_exponential((rows, K)), axis=1)
    logw = -np.log(S) / m
    return logw, np.log(S[:, -1])


def invariance_test(
    m: float,
    f,
    K: int,
    trials: int,
    seed: int,
    rel_tol: float = 1e-6,
    threshold: float = 0.02,
    compensate: bool = True,
    strict: bool = False,
) -> InvarianceReport:
    """Two-sample KS test of ln sum e^{y/m} e^{f} against ln c + ln sum e^{y/m}.

    Both sides use independent realizations. With ``compensate`` each
    truncated sum gets its conditional expected tail: E[e^f] times the tail
    integral on the marked side, the bare integral on the unmarked side.
    ``flagged_fraction`` counts trials whose unmarked tail estimate exceeds
    ``rel_tol`` of the partial sum on either side.
    """
    if not 0 < m < 1:
        raise ParameterError(f"m must lie in (0, 1), got {m}")
    if trials < 2:
        raise ParameterError(f"need at least two trials, got {trials}")
    log_c = f.log_c(m)
    lme = f.log_mean_exp()
    batch = max(BATCH_ELEMENTS // (K * f.cost), 1)
    lhs, rhs = [], []
    flagged = 0
    for b, start in enumerate(range(0, trials, batch)):
        rows = min(batch, trials - start)
        logw, log_sk = _log_sums(generator(seed, 0, b), rows, K, m)
        marks = f.sample(generator(seed, 1, b), (rows, K))
        tail = log_tail(log_sk, m)
        flagged_l = tail > math.log(rel_tol) + special.logsumexp(logw, axis=1)
        left = special.logsumexp(logw + marks, axis=1)
        if compensate:
            left = np.logaddexp(left, lme + tail)
        logw, log_sk = _log_sums(generator(seed, 2, b), rows, K, m)
        tail = log_tail(log_sk, m)
        right = special.logsumexp(logw, axis=1)
        flagged_r = tail > math.log(rel_tol) + right
        if compensate:
            right = np.logaddexp(right, tail)
        flagged += int(np.count_nonzero(flagged_l | flagged_r))
        lhs.append(left)
        rhs.append(log_c + right)
    res = stats.ks_2samp(np.concatenate(lhs), np.concatenate(rhs))
    report = InvarianceReport(m, float(res.statistic), float(res.pvalue), log_c, K, trials, flagged / trials, threshold)
    if strict and not report.tail_clear:
        raise TailTooLargeError(f"{flagged} of {trials} trials have tail above rel_tol={rel_tol:g} at K={K}")
    return report


@dataclass(frozen=True)
class CascadeRealization:
    """Nested point processes: ``y[i]`` has shape ``(K**i, K)``, one child row per level-i node."""

    m: VariationalPoint
    K_branch: int
    y: tuple[np.ndarray, ...]
    seed: int

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def leaf_count(self) -> int:
        return self.K_branch ** self.n

    def log_weights(self) -> np.ndarray:
        """ln w(alpha) for all leaves, alpha in row-major order."""
        lw = np.zeros(1)
        for yi, mi in zip(self.y, self.m.m):
            lw = (lw[:, None] + yi / mi).ravel()
        return lw

    def log_sum(self, marks: Sequence[np.ndarray] | None = None, tail_log_mean_exp: float | None = None) -> float:
        """ln sum_alpha w(alpha) exp(sum_i f_i(alpha_1..alpha_i)).

        ``marks[i]`` has the shape of ``y[i]``. If ``tail_log_mean_exp`` is
        given, each deepest-level sum gets its expected tail with that
        E[e^{f_n}].
        """
        inner = None
        for i in reversed(range(self.n)):
            term = self.y[i] / self.m.m[i]
            if marks is not None:
                term = term + marks[i]
            if inner is not None:
                term = term + inner.reshape(term.shape)
            total = special.logsumexp(term, axis=1)
            if inner is None and tail_log_mean_exp is not None:
                m_n = self.m.m[i]
                if m_n >= 1:
                    raise ParameterError("tail compensation needs m_n < 1")
                total = np.logaddexp(total, tail_log_mean_exp + log_tail(-self.y[i][:, -1], m_n))
            inner = total
        return float(inner[0])


def sample_cascade(p: GremParams | int, m: VariationalPoint, K_branch: int, seed: int) -> CascadeRealization:
    n = p if isinstance(p, int) else p.n
    if len(m.m) != n:
        raise ParameterError(f"m has {len(m.m)} entries, cascade depth is {n}")
    if K_branch < 1:
        raise ParameterError(f"K_branch must be >= 1, got {K_branch}")
    if K_branch**n > MAX_LEAVES:
        raise CapacityError(f"{K_branch}**{n} leaves exceeds {MAX_LEAVES}")
    ys = []
    for i in range(n):
        S = np.cumsum(generator(seed, i + 1).standard_exponential((K_branch**i, K_branch)), axis=1)
        y = -np.log(S)
        y.setflags(write=False)
        ys.append(y)
    return CascadeRealization(m, K_branch, tuple(ys), seed)


@dataclass(frozen=True)
class CascadeInvarianceReport:
    m: tuple[float, ...]
    ks: float
    pvalue: float
    log_c: float
    K_branch: int
    trials: int
    threshold: float

    @property
    def passed(self) -> bool:
        return self.ks < self.threshold


def cascade_invariance_test(
    m: VariationalPoint,
    fs: Sequence,
    K_branch: int,
    trials: int,
    seed: int,
    threshold: float = 0.02,
) -> CascadeInvarianceReport:
    """Level-by-level invariance: marks f_i on level-i nodes factor out as prod_i c_i(m_i).

    The marked cascade sum is compared in law with sum_i ln c_i + ln of an
    independent unmarked cascade sum, the deepest level tail-compensated on
    both sides.
    """
    n = len(m.m)
    if len(fs) != n:
        raise ParameterError(f"need one mark distribution per level, got {len(fs)} for n={n}")
    if m.m[-1] >= 1:
        raise ParameterError("cascade test needs m_n < 1")
    log_c = math.fsum(f.log_c(mi) for f, mi in zip(fs, m.m))
    lhs = np.empty(trials)
    rhs = np.empty(trials)
    for t in range(trials):
        c = sample_cascade(n, m, K_branch, derive_seed(seed, 0, t))
        rng = generator(seed, 1, t)
        marks = [f.sample(rng, yi.shape) for f, yi in zip(fs, c.y)]
        lhs[t] = c.log_sum(marks, fs[-1].log_mean_exp())
        c = sample_cascade(n, m, K_branch, derive_seed(seed, 2, t))
        rhs[t] = log_c + c.log_sum(None, 0.0)
    res = stats.ks_2samp(lhs, rhs)
    return CascadeInvarianceReport(m.m, float(res.statistic), float(res.pvalue), log_c, K_branch, trials, threshold)

