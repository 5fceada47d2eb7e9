"""Verification harness: identities and inequalities checked at desk scale.

Each check returns a :class:`CheckReport`; ``run_suite`` runs a named
collection of them for the command line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import sympy
from scipy import integrate

from . import bounds, cascade
from .exact import LN2, log_partitions, map_replicas, mean_stderr, replica_observables
from .model import GremParams, ParameterError, sample_disorder
from .rng import derive_seed, generator

# absolute allowance for rounding when a bound is attained exactly (beta = 0)
FLOAT_SLACK = 1e-12


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    lhs: float
    rhs: float
    tolerance: float
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "tolerance": self.tolerance,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


def _report(name, passed, lhs, rhs, tolerance, **metadata) -> CheckReport:
    return CheckReport(name, bool(passed), float(lhs), float(rhs), float(tolerance), metadata)


def sum_rule_check(
    beta_max: float,
    N: int,
    R: int,
    grid_points: int = 33,
    seed: int = 0,
    threads: int | None = None,
) -> CheckReport:
    """Direct REM pressure vs ln 2 + b^2/4 - int_0^b (b'/2) E[overlap(b')] db'.

    Composite Simpson on a uniform grid; every grid point and the direct side
    use the same disorder replicas.
    """
    if grid_points < 16:
        raise ParameterError(f"need at least 16 grid points, got {grid_points}")
    grid = np.linspace(0.0, beta_max, grid_points)
    press, ov = replica_observables(GremParams.rem(N), grid, R, seed, threads)
    direct = press[:, -1]
    if beta_max == 0:
        integral = np.zeros(R)
    else:
        integral = integrate.simpson(grid / 2 * ov, x=grid, axis=1)
    rebuilt = LN2 + beta_max**2 / 4 - integral
    lhs, _ = mean_stderr(direct)
    rhs, _ = mean_stderr(rebuilt)
    _, se = mean_stderr(direct - rebuilt)
    tol = max(2e-3, 4 * se)
    return _report("sumrule", abs(lhs - rhs) <= tol, lhs, rhs, tol, N=N, beta=beta_max, R=R, seed=seed, grid_points=grid_points)


def derivative_check(
    N: int,
    beta: float,
    R: int,
    seed: int = 0,
    h: float = 1e-3,
    threads: int | None = None,
) -> CheckReport:
    """Centered finite difference of the REM pressure vs (b/2)(1 - E[overlap])."""
    if beta < h:
        raise ParameterError(f"need beta >= h, got beta={beta}, h={h}")
    p = GremParams.rem(N)
    press, ov = replica_observables(p, [beta - h, beta + h, beta], R, seed, threads)
    fd = (press[:, 1] - press[:, 0]) / (2 * h)
    ident = beta / 2 * (1 - ov[:, 2])
    lhs, _ = mean_stderr(fd)
    rhs, _ = mean_stderr(ident)
    _, se = mean_stderr(fd - ident)
    tol = max(1e-4, 4 * se)
    return _report("derivative", abs(lhs - rhs) <= tol, lhs, rhs, tol, N=N, beta=beta, R=R, seed=seed, h=h)


def concentration_bound(N: int, t: float) -> float:
    """2 exp(-N t^2 / 2)."""
    return 2 * math.exp(-N * t * t / 2)


def concentration_check(
    N: int,
    beta: float,
    t: float,
    R: int,
    seed: int = 0,
    threads: int | None = None,
    params: GremParams | None = None,
) -> CheckReport:
    """Empirical P(|ln Z / N - P_N| >= beta t) vs 2 exp(-N t^2 / 2).

    P_N is the sample mean over the same replicas. Passes when the frequency
    is at most the bound plus three binomial standard deviations.
    """
    if R < 1000:
        raise ParameterError(f"need at least 1000 replicas, got {R}")
    p = GremParams.rem(N) if params is None else params
    press, _ = replica_observables(p, [beta], R, seed, threads)
    x = press[:, 0]
    mean, _ = mean_stderr(x)
    freq = float(np.count_nonzero(np.abs(x - mean) >= beta * t)) / R
    bound = concentration_bound(p.N, t)
    b = min(bound, 1.0)
    slack = 3 * math.sqrt(b * (1 - b) / R)
    return _report(
        "concentration", freq <= bound + slack, freq, bound, slack, N=p.N, beta=beta, t=t, R=R, seed=seed
    )


def overlap_decay_check(
    betas: Sequence[float],
    Ns: Sequence[int],
    R: int,
    seed: int = 0,
    eps0: float = 0.01,
    threads: int | None = None,
) -> CheckReport:
    """(1/N) ln E[overlap] <= -eps0 at the largest N, for every beta < beta_c.

    Also requires E[overlap] itself to be nonincreasing along ``Ns`` within
    three combined standard errors.
    """
    betas = [float(b) for b in betas]
    if any(b >= bounds.BETA_C for b in betas):
        raise ParameterError(f"overlap decay is only claimed below beta_c={bounds.BETA_C:.6f}")
    Ns = sorted(int(n) for n in Ns)
    rates: dict[str, list[float]] = {}
    monotone = True
    stats = {}
    for N in Ns:
        _, ov = replica_observables(GremParams.rem(N), betas, R, derive_seed(seed, N), threads)
        stats[N] = [mean_stderr(ov[:, j]) for j in range(len(betas))]
    for j, b in enumerate(betas):
        means = [stats[N][j][0] for N in Ns]
        ses = [stats[N][j][1] for N in Ns]
        for i in range(len(Ns) - 1):
            if means[i + 1] > means[i] + 3 * math.hypot(ses[i], ses[i + 1]):
                monotone = False
        rates[repr(b)] = [math.log(m) / N for m, N in zip(means, Ns)]
    worst = max(r[-1] for r in rates.values())
    return _report(
        "overlap_decay", worst <= -eps0 and monotone, worst, -eps0, 0.0,
        Ns=Ns, betas=betas, R=R, seed=seed, rates=rates, monotone=monotone,
    )


def grem_lower_check(
    p: GremParams,
    beta: float,
    R: int,
    seed: int = 0,
    threads: int | None = None,
) -> CheckReport:
    """GREM pressure >= sum_i kappa_i * REM pressure at size K_i and beta sqrt(a_i/kappa_i).

    Replica ``r`` of the REM at level 1 reuses the GREM replica seed, so its
    table coincides with the GREM level-1 table; deeper levels get derived
    seeds. The error bar comes from the per-replica differences.
    """

    def one(r: int) -> tuple[float, float]:
        sr = derive_seed(seed, r)
        left = log_partitions(sample_disorder(p, sr), [beta])[0] / p.N
        parts = []
        for i, (a, k, K) in enumerate(zip(p.a, p.kappa, p.K), start=1):
            d = sample_disorder(GremParams.rem(K), sr if i == 1 else derive_seed(sr, i))
            parts.append(k * log_partitions(d, [math.sqrt(a / k) * beta])[0] / K)
        return left, math.fsum(parts)

    rows = np.array(map_replicas(one, R, threads))
    lhs, _ = mean_stderr(rows[:, 0])
    rhs, _ = mean_stderr(rows[:, 1])
    _, se = mean_stderr(rows[:, 0] - rows[:, 1])
    tol = 4 * se
    return _report(
        "grem_lower", lhs >= rhs - tol, lhs, rhs, tol,
        N=p.N, a=list(p.a), kappa=list(p.kappa), K=list(p.K), beta=beta, R=R, seed=seed,
    )


def upper_bound_check(
    p: GremParams,
    betas: Sequence[float],
    R: int,
    seed: int = 0,
    threads: int | None = None,
) -> CheckReport:
    """Quenched pressure <= closed-form bound within 4 standard errors at every beta."""
    from .exact import pressure_curve

    q = bounds.q_rem if p.n == 1 else (lambda b: bounds.q_grem(b, p))
    worst_excess = -math.inf
    worst = None
    for est in pressure_curve(p, betas, R, seed, threads):
        excess = est.mean - q(est.beta) - 4 * est.stderr - FLOAT_SLACK
        if excess > worst_excess:
            worst_excess, worst = excess, est
    return _report(
        "upper_bound", worst_excess <= 0, worst.mean, q(worst.beta), 4 * worst.stderr + FLOAT_SLACK,
        N=p.N, a=list(p.a), kappa=list(p.kappa), worst_beta=worst.beta, R=R, seed=seed, points=len(betas),
    )


def per_sample_check(N: int, trials: int, seed: int = 0, beta_max: float = 3.0) -> CheckReport:
    """Entropy positivity and the Holder step on random (sample, beta, m); counts violations."""
    from .exact import entropy_positivity_check, holder_check

    rng = generator(seed, 99)
    violations = 0
    for r in range(trials):
        d = sample_disorder(GremParams.rem(N), derive_seed(seed, r))
        beta = float(rng.uniform(0, beta_max))
        m = float(rng.choice(np.arange(1, 10) / 10))
        if not entropy_positivity_check(d, beta, m):
            violations += 1
        if not holder_check(d, beta, m):
            violations += 1
    return _report("per_sample", violations == 0, violations, 0, 0, N=N, trials=trials, seed=seed)


def random_nondegenerate_params(rng: np.random.Generator, n: int, N: int = 10**6) -> GremParams:
    a = rng.dirichlet(np.ones(n))
    ratios = np.sort(rng.uniform(0.2, 3.0, n))
    while np.any(np.diff(ratios) <= 1e-3):
        ratios = np.sort(rng.uniform(0.2, 3.0, n))
    kappa = a * ratios
    kappa /= kappa.sum()
    a /= a.sum()
    return GremParams(tuple(a), tuple(kappa), N)


def optimizer_check(n_params: int = 20, n_betas: int = 10, seed: int = 0) -> CheckReport:
    """Closed-form minimizer vs numeric search, and Q^(n) vs its REM decomposition."""
    rng = generator(seed, 7)
    worst_opt = 0.0
    worst_dec = 0.0
    for _ in range(n_params):
        p = random_nondegenerate_params(rng, int(rng.integers(1, 5)))
        top = bounds.critical_temperatures(p).beta_star[-1]
        for beta in rng.uniform(0, 2 * top, n_betas):
            _, closed = bounds.optimize(float(beta), p)
            _, numeric = bounds.numeric_optimize(float(beta), p)
            worst_opt = max(worst_opt, abs(closed - numeric))
        for beta in np.linspace(0, 2 * top, 100):
            worst_dec = max(worst_dec, abs(bounds.q_grem(beta, p) - bounds.grem_decomposition(beta, p)))
    return _report(
        "optimizer", worst_opt <= 1e-6 and worst_dec <= 1e-12, worst_opt, worst_dec, 1e-6,
        n_params=n_params, n_betas=n_betas, seed=seed, decomposition_tolerance=1e-12,
    )


@dataclass(frozen=True)
class GeneralHamiltonianSpec:
    """Couplings of H(sigma; J) = -(1/sqrt 2) sum_X Delta_X J_X sigma_X on a finite lattice.

    ``deltas`` lists the distinct magnitudes and ``counts`` how many
    interaction terms carry each (all ones when omitted). Magnitudes may be
    sympy numbers, in which case the stability constant is exact.
    """

    lattice_size: int
    deltas: tuple
    counts: tuple | None = None

    def __post_init__(self):
        if self.lattice_size < 1:
            raise ParameterError(f"lattice size must be positive, got {self.lattice_size}")
        deltas = tuple(self.deltas)
        if not deltas:
            raise ParameterError("need at least one coupling")
        if any(d < 0 for d in deltas):
            raise ParameterError("coupling magnitudes must be nonnegative")
        counts = (1,) * len(deltas) if self.counts is None else tuple(int(c) for c in self.counts)
        if len(counts) != len(deltas) or any(c < 1 for c in counts):
            raise ParameterError("counts must be positive, one per magnitude")
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def rem(cls, N: int) -> GeneralHamiltonianSpec:
        """|Lambda| = N and 2^N terms, each of magnitude sqrt(N 2^-N)."""
        return cls(N, (sympy.sqrt(sympy.Rational(N, 2**N)),), (2**N,))


def stability_constant(spec: GeneralHamiltonianSpec):
    """(1/|Lambda|) sum_X Delta_X^2."""
    if all(isinstance(d, (int, float, np.floating, np.integer)) for d in spec.deltas):
        return math.fsum(c * float(d) ** 2 for d, c in zip(spec.deltas, spec.counts)) / spec.lattice_size
    total = sum((c * d**2 for d, c in zip(spec.deltas, spec.counts)), sympy.Integer(0))
    return total / spec.lattice_size


def lipschitz_constant(beta: float, c: float, lattice_size: int) -> float:
    """beta * sqrt(c / (2 |Lambda|)): Lipschitz constant of the random pressure in J."""
    if beta < 0 or c < 0 or lattice_size < 1:
        raise ParameterError("need beta >= 0, c >= 0 and lattice_size >= 1")
    return beta * math.sqrt(c / (2 * lattice_size))


def gaussian_tail_bound(t: float, lattice_size: int, c: float, beta: float) -> float:
    """2 exp(-t^2 |Lambda| / (2 c beta^2)) on deviations of the random pressure by t."""
    if beta == 0 or c == 0:
        return 0.0 if t > 0 else 2.0
    return 2 * math.exp(-t * t * lattice_size / (2 * c * beta * beta))


def induction_map(beta: float, a: float = 0.25) -> float:
    """beta + a beta_c (1 - beta/beta_c)^2, for 0 < a < 1/2.

    Iterating from 0 gives a temperature schedule increasing to beta_c;
    provided for plotting only.
    """
    if not 0 < a < 0.5:
        raise ParameterError(f"a must lie in (0, 1/2), got {a}")
    return beta + a * bounds.BETA_C * (1 - beta / bounds.BETA_C) ** 2


def constants_check(Ns: Iterable[int] = range(1, 31)) -> CheckReport:
    """REM stability constant is exactly 1 and Lipschitz values match hand evaluation."""
    Ns = list(Ns)
    cs = [stability_constant(GeneralHamiltonianSpec.rem(N)) for N in Ns]
    exact = all(c == 1 for c in cs)
    spots = [((2.0, 1.0, 2), 1.0), ((0.0, 1.0, 5), 0.0), ((1.0, 2.0, 1), 1.0), ((3.0, 8.0, 4), 3.0)]
    err = max(abs(lipschitz_constant(*args) - want) for args, want in spots)
    return _report("constants", exact and err <= 1e-15, float(max(cs, key=float)), 1.0, 1e-15, Ns=list(Ns), lipschitz_error=err)


def cascade_checks(
    ms: Sequence[float] = (0.3, 0.5, 0.8),
    trials: int = 10_000,
    K: int = 1024,
    seed: int = 0,
) -> list[CheckReport]:
    """KS invariance for constant, Gaussian and uniform marks at each m."""
    handles = {
        "constant": cascade.Constant(0.7),
        "gaussian": cascade.Gaussian(0.0, 1.0),
        "uniform": cascade.Uniform(-1.0, 1.0),
    }
    out = []
    for j, m in enumerate(ms):
        for k, (label, f) in enumerate(handles.items()):
            rep = cascade.invariance_test(m, f, K, trials, derive_seed(seed, j, k))
            out.append(
                _report(
                    "cascade", rep.passed, rep.ks, rep.threshold, 0.0,
                    f=label, m=m, K=K, trials=trials, log_c=rep.log_c,
                    tail_flagged_fraction=rep.flagged_fraction, seed=seed,
                )
            )
    return out


SUITE_NAMES = (
    "upper_bound",
    "sumrule",
    "derivative",
    "per_sample",
    "overlap_decay",
    "concentration",
    "grem_lower",
    "cascade",
    "optimizer",
    "constants",
)


def default_suite(seed: int = 0, threads: int | None = None, N: int = 16, R: int = 200) -> dict[str, Callable[[], list[CheckReport]]]:
    """Named groups of checks at desk scale."""
    grem = GremParams((0.6, 0.4), (0.5, 0.5), N)
    grid = list(np.linspace(0, 2 * bounds.BETA_C, 33))
    return {
        "upper_bound": lambda: [
            upper_bound_check(GremParams.rem(N), grid, R, seed, threads),
            upper_bound_check(grem, grid, R, seed, threads),
        ],
        "sumrule": lambda: [sum_rule_check(b, N, R, 33, seed, threads) for b in (0.5, 1.0, 1.5)],
        "derivative": lambda: [derivative_check(N, b, R, seed, threads=threads) for b in (0.5, 1.0)],
        "per_sample": lambda: [per_sample_check(min(N, 12), 1000, seed)],
        "overlap_decay": lambda: [overlap_decay_check([0.0, 0.5, 1.0, 1.4], [12, 16, 20], 500, seed, threads=threads)],
        "concentration": lambda: [
            concentration_check(N, b, t, 2000, seed, threads) for b in (0.5, 1.0, 2.0) for t in (0.2, 0.5)
        ],
        "grem_lower": lambda: [grem_lower_check(grem, b, R, seed, threads) for b in (0.5, 1.0, 2.0, 3.0)],
        "cascade": lambda: cascade_checks(seed=seed),
        "optimizer": lambda: [optimizer_check(seed=seed)],
        "constants": lambda: [constants_check()],
    }


def run_suite(
    only: Sequence[str] | None = None,
    seed: int = 0,
    threads: int | None = None,
    N: int = 16,
    R: int = 200,
) -> list[CheckReport]:
    suite = default_suite(seed, threads, N, R)
    names = list(suite) if not only else list(only)
    unknown = [n for n in names if n not in suite]
    if unknown:
        raise ParameterError(f"unknown check(s) {unknown}; choose from {list(suite)}")
    reports = []
    for name in names:
        reports.extend(suite[name]())
    return reports
