"""Exact enumeration of partition functions and disorder-averaged observables."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

from .model import DEFAULT_CAP, FLAT_MAX, CapacityError, DisorderSample, GremParams, ParameterError, sample_disorder
from .rng import default_threads, derive_seed

LN2 = math.log(2.0)
SLACK = 1e-9

T = TypeVar("T")


@dataclass(frozen=True)
class PressureEstimate:
    mean: float
    stderr: float
    replicas: int
    beta: float
    params: GremParams
    seed: int


@dataclass(frozen=True)
class OverlapEstimate:
    mean: float
    stderr: float
    replicas: int
    beta: float
    seed: int


def mean_stderr(values) -> tuple[float, float]:
    """Mean and standard error using exactly rounded sums.

    The result does not depend on the order in which the values were
    produced, and identical inputs give their common value with zero error.
    """
    v = np.asarray(values, dtype=float).ravel()
    n = v.size
    if n == 0:
        raise ValueError("no samples")
    # shifting by the minimum keeps equal inputs exact and is independent of order
    x0 = float(v.min())
    mean = x0 + math.fsum(v - x0) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def _check_betas(betas) -> np.ndarray:
    b = np.atleast_1d(np.asarray(betas, dtype=float))
    if np.any(~np.isfinite(b)) or np.any(b < 0):
        raise ParameterError(f"inverse temperatures must be finite and >= 0: {b}")
    return b


def log_partitions(d: DisorderSample, betas, cap: int = DEFAULT_CAP) -> np.ndarray:
    """ln Z(beta) of one disorder sample for each entry of ``betas``."""
    N = d.params.N
    if N > cap:
        raise CapacityError(f"N={N} exceeds enumeration cap {cap}")
    betas = _check_betas(betas)
    chunks = [d.energies] if N <= FLAT_MAX else d.energy_chunks()
    out = np.full(betas.shape, -np.inf)
    for e in chunks:
        emin = float(e.min())
        shifted = e - emin
        buf = np.empty_like(shifted)
        for j, b in enumerate(betas):
            if b == 0.0:
                continue
            np.multiply(shifted, -b, out=buf)
            np.exp(buf, out=buf)
            out[j] = np.logaddexp(out[j], -b * emin + math.log(buf.sum()))
    out[betas == 0.0] = N * LN2
    return out


def log_partition(d: DisorderSample, beta: float, cap: int = DEFAULT_CAP) -> float:
    return float(log_partitions(d, [beta], cap)[0])


def overlap_ratio(d: DisorderSample, beta: float) -> float:
    """Two-replica probability of coinciding configurations, Z(2b)/Z(b)^2."""
    l1, l2 = log_partitions(d, [beta, 2 * beta])
    return math.exp(l2 - 2 * l1)


def replica_log_partitions(
    p: GremParams,
    betas,
    replicas: int,
    seed: int,
    threads: int | None = None,
    cap: int = DEFAULT_CAP,
) -> np.ndarray:
    """Array of shape ``(replicas, len(betas))`` of ln Z over independent disorder.

    Replica ``r`` uses seed ``derive_seed(seed, r)``; the same replica sees the
    same Hamiltonian at every inverse temperature.
    """
    if replicas < 1:
        raise ParameterError(f"need at least one replica, got {replicas}")
    if p.N > cap:
        raise CapacityError(f"N={p.N} exceeds enumeration cap {cap}")
    betas = _check_betas(betas)

    def one(r: int) -> np.ndarray:
        return log_partitions(sample_disorder(p, derive_seed(seed, r), cap), betas, cap)

    return np.vstack(map_replicas(one, replicas, threads))


def map_replicas(fn: Callable[[int], T], replicas: int, threads: int | None = None) -> list[T]:
    """``[fn(0), ..., fn(replicas - 1)]``, optionally on a thread pool; order is preserved."""
    threads = default_threads() if threads is None else max(int(threads), 1)
    if threads == 1:
        return [fn(r) for r in range(replicas)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(replicas)))


def replica_observables(
    p: GremParams,
    betas,
    replicas: int,
    seed: int,
    threads: int | None = None,
    cap: int = DEFAULT_CAP,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-replica pressures ln Z / N and overlaps Z(2b)/Z(b)^2, each ``(R, B)``."""
    betas = _check_betas(betas)
    lz = replica_log_partitions(p, np.concatenate([betas, 2 * betas]), replicas, seed, threads, cap)
    l1, l2 = lz[:, : betas.size], lz[:, betas.size:]
    return l1 / p.N, np.exp(l2 - 2 * l1)


def pressure_curve(
    p: GremParams,
    betas: Sequence[float],
    replicas: int,
    seed: int,
    threads: int | None = None,
    cap: int = DEFAULT_CAP,
) -> list[PressureEstimate]:
    """Quenched pressure at each beta, sharing the disorder stream across betas."""
    betas = _check_betas(betas)
    samples = replica_log_partitions(p, betas, replicas, seed, threads, cap) / p.N
    out = []
    for j, b in enumerate(betas):
        mean, se = mean_stderr(samples[:, j])
        out.append(PressureEstimate(mean, se, replicas, float(b), p, seed))
    return out


def quenched_pressure(
    p: GremParams,
    beta: float,
    replicas: int,
    seed: int,
    threads: int | None = None,
    cap: int = DEFAULT_CAP,
) -> PressureEstimate:
    if replicas < 2:
        raise ParameterError(f"need at least two replicas for an error bar, got {replicas}")
    return pressure_curve(p, [beta], replicas, seed, threads, cap)[0]


def annealed_pressure_rem(beta: float) -> float:
    """(1/N) ln E[Z_N(beta)] for the REM, identical for every N."""
    if beta < 0:
        raise ParameterError(f"beta must be >= 0, got {beta}")
    return LN2 + beta * beta / 4


def overlap_expectation(
    p: GremParams,
    beta: float,
    replicas: int,
    seed: int,
    threads: int | None = None,
    cap: int = DEFAULT_CAP,
) -> OverlapEstimate:
    """Disorder average of the two-replica coincidence probability.

    The ratio Z(2b)/Z(b)^2 is the coincidence probability for any
    Hamiltonian; only the derivative identity needs the REM.
    """
    _, ov = replica_observables(p, [beta], replicas, seed, threads, cap)
    mean, se = mean_stderr(ov[:, 0])
    return OverlapEstimate(mean, se, replicas, float(beta), seed)


def _require_rem(p: GremParams) -> None:
    if p.n != 1:
        raise ParameterError(f"operation defined for the REM (n=1), got n={p.n}")


def pressure_derivative(
    p: GremParams,
    beta: float,
    replicas: int,
    seed: int,
    threads: int | None = None,
    cap: int = DEFAULT_CAP,
) -> float:
    """d/dbeta of the REM quenched pressure via (beta/2) (1 - E[overlap])."""
    _require_rem(p)
    if beta == 0:
        return 0.0
    ov = overlap_expectation(p, beta, replicas, seed, threads, cap)
    return beta / 2 * (1 - ov.mean)


def entropy_positivity_check(d: DisorderSample, beta: float, m: float) -> bool:
    """m ln Z(beta) <= ln Z(m beta) for 0 < m <= 1."""
    if not 0 < m <= 1:
        raise ParameterError(f"m must lie in (0, 1], got {m}")
    lz, lzm = log_partitions(d, [beta, m * beta])
    return bool(m * lz <= lzm + SLACK)


def holder_check(d: DisorderSample, beta: float, m: float) -> bool:
    """ln Z(2 m beta) <= m ln Z(beta) + (1 - m) ln Z(m beta / (1 - m)) for 0 < m < 1."""
    if not 0 < m < 1:
        raise ParameterError(f"m must lie in (0, 1), got {m}")
    l2m, l1, lr = log_partitions(d, [2 * m * beta, beta, m * beta / (1 - m)])
    return bool(l2m <= m * l1 + (1 - m) * lr + SLACK)
