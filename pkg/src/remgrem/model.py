"""GREM/REM parameters, spin configurations and disorder sampling.

Bit convention: bit ``j`` of ``SpinConfig.bits`` encodes spin ``sigma_{j+1}``
(bit set means ``+1``). Level ``i`` owns the contiguous bit range
``[K_1 + ... + K_{i-1}, K_1 + ... + K_i)``, so the joint index
``(pi_1, ..., pi_i)`` of a state is simply ``bits mod 2**(K_1 + ... + K_i)``.
Levels are numbered from 1, as in the math.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .rng import generator

DEFAULT_CAP = 26
CHUNK_BITS = 16
FLAT_MAX = 20


class ParameterError(ValueError):
    """Invalid model parameters or mismatched inputs."""


class CapacityError(RuntimeError):
    """A request exceeds the enumeration or sampling capacity."""


def _largest_remainder(kappa: Sequence[float], N: int) -> tuple[int, ...]:
    exact = [k * N for k in kappa]
    K = [math.floor(x) for x in exact]
    short = N - sum(K)
    order = sorted(range(len(K)), key=lambda i: (exact[i] - K[i], -i), reverse=True)
    for i in order[:short]:
        K[i] += 1
    return tuple(K)


@dataclass(frozen=True)
class GremParams:
    """Tree depth ``n`` = ``len(a)``; level variances ``a``, proportions ``kappa``.

    When ``K`` is omitted the block sizes are ``kappa * N`` rounded by the
    largest-remainder rule so that they sum to ``N``.
    """

    a: tuple[float, ...]
    kappa: tuple[float, ...]
    N: int
    K: tuple[int, ...] | None = None

    def __post_init__(self):
        a = tuple(float(x) for x in self.a)
        kappa = tuple(float(x) for x in self.kappa)
        N = int(self.N)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "N", N)
        if not a:
            raise ParameterError("need at least one level")
        if len(kappa) != len(a):
            raise ParameterError(f"len(a)={len(a)} but len(kappa)={len(kappa)}")
        if N < 1:
            raise ParameterError(f"N must be positive, got {N}")
        if any(not math.isfinite(x) or x <= 0 for x in a):
            raise ParameterError(f"level variances must be positive: {a}")
        if any(not math.isfinite(x) or x <= 0 for x in kappa):
            raise ParameterError(f"level proportions must be positive: {kappa}")
        if abs(math.fsum(a) - 1.0) > 1e-12:
            raise ParameterError(f"sum(a) must be 1, got {math.fsum(a)!r}")
        if abs(math.fsum(kappa) - 1.0) > 1e-12:
            raise ParameterError(f"sum(kappa) must be 1, got {math.fsum(kappa)!r}")
        if self.K is None:
            K = _largest_remainder(kappa, N)
        else:
            K = tuple(int(k) for k in self.K)
            if len(K) != len(a):
                raise ParameterError(f"len(K)={len(K)} but n={len(a)}")
        if sum(K) != N:
            raise ParameterError(f"block sizes {K} do not sum to N={N}")
        if any(k < 1 for k in K):
            raise ParameterError(f"kappa*N rounds a block to zero: K={K}")
        object.__setattr__(self, "K", K)

    @classmethod
    def rem(cls, N: int) -> GremParams:
        return cls(a=(1.0,), kappa=(1.0,), N=N)

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def prefix_bits(self) -> tuple[int, ...]:
        """``K_1 + ... + K_i`` for each level ``i``."""
        out, acc = [], 0
        for k in self.K:
            acc += k
            out.append(acc)
        return tuple(out)

    @property
    def nondegenerate(self) -> bool:
        ratios = [k / a for k, a in zip(self.kappa, self.a)]
        return all(r0 < r1 for r0, r1 in zip(ratios, ratios[1:]))

    def with_N(self, N: int) -> GremParams:
        return GremParams(a=self.a, kappa=self.kappa, N=N)


@dataclass(frozen=True)
class SpinConfig:
    bits: int
    N: int

    def __post_init__(self):
        if not 0 <= self.bits < (1 << self.N):
            raise ParameterError(f"bits={self.bits} out of range for N={self.N}")

    @classmethod
    def from_spins(cls, spins: Sequence[int]) -> SpinConfig:
        bits = 0
        for j, s in enumerate(spins):
            if s not in (-1, 1):
                raise ParameterError(f"spins must be +-1, got {s}")
            if s == 1:
                bits |= 1 << j
        return cls(bits, len(spins))

    def spins(self) -> list[int]:
        return [1 if (self.bits >> j) & 1 else -1 for j in range(self.N)]


def _check_config(s: SpinConfig, p: GremParams) -> None:
    if s.N != p.N:
        raise ParameterError(f"configuration has N={s.N}, parameters have N={p.N}")


def project(s: SpinConfig, i: int, p: GremParams) -> int:
    """Index in ``[0, 2**K_i)`` of the ``i``-th block of ``s``."""
    _check_config(s, p)
    if not 1 <= i <= p.n:
        raise ParameterError(f"level {i} out of range 1..{p.n}")
    lo = p.prefix_bits[i - 1] - p.K[i - 1]
    return (s.bits >> lo) & ((1 << p.K[i - 1]) - 1)


def covariance(s: SpinConfig, t: SpinConfig, p: GremParams) -> float:
    """E[H(s) H(t)] = (N/2) * sum of a_i over levels where all blocks up to i agree."""
    _check_config(s, p)
    _check_config(t, p)
    total = 0.0
    for a_i, bits in zip(p.a, p.prefix_bits):
        mask = (1 << bits) - 1
        if (s.bits & mask) != (t.bits & mask):
            break
        total += a_i
    return p.N / 2 * total


class DisorderSample:
    """One realization of the Gaussian level tables.

    The level-``i`` table holds ``2**(K_1 + ... + K_i)`` standard normals.
    Tables are split into chunks of ``2**CHUNK_BITS`` entries and chunk ``c``
    of level ``i`` is drawn from a Philox stream keyed by ``(seed, i, c)``,
    so any piece can be regenerated independently and nothing larger than a
    chunk has to be held in memory.
    """

    def __init__(self, params: GremParams, seed: int | None, tables: Sequence[np.ndarray] | None = None):
        self.params = params
        self.seed = seed
        self._tables = None
        if tables is not None:
            checked = []
            for i, (t, bits) in enumerate(zip(tables, params.prefix_bits), start=1):
                t = np.array(t, dtype=float)
                if t.shape != (1 << bits,):
                    raise ParameterError(f"level {i} table must have shape ({1 << bits},), got {t.shape}")
                t.setflags(write=False)
                checked.append(t)
            if len(checked) != params.n:
                raise ParameterError(f"expected {params.n} tables, got {len(checked)}")
            self._tables = tuple(checked)
        elif seed is None:
            raise ParameterError("need either a seed or explicit tables")

    @classmethod
    def from_tables(cls, params: GremParams, tables: Sequence[np.ndarray]) -> DisorderSample:
        return cls(params, None, tables)

    def __repr__(self):
        return f"DisorderSample(params={self.params!r}, seed={self.seed!r})"

    @property
    def chunk_size(self) -> int:
        return 1 << min(self.params.N, CHUNK_BITS)

    @property
    def n_chunks(self) -> int:
        return 1 << max(self.params.N - CHUNK_BITS, 0)

    def table_chunk(self, level: int, c: int) -> np.ndarray:
        bits = self.params.prefix_bits[level - 1]
        size = 1 << min(bits, CHUNK_BITS)
        if self._tables is not None:
            return self._tables[level - 1][c * size:(c + 1) * size]
        return generator(self.seed, level, c).standard_normal(size)

    def table(self, level: int) -> np.ndarray:
        if not 1 <= level <= self.params.n:
            raise ParameterError(f"level {level} out of range 1..{self.params.n}")
        bits = self.params.prefix_bits[level - 1]
        count = 1 << max(bits - CHUNK_BITS, 0)
        return np.concatenate([self.table_chunk(level, c) for c in range(count)])

    def value(self, level: int, index: int) -> float:
        c, r = divmod(index, 1 << CHUNK_BITS)
        return float(self.table_chunk(level, c)[r])

    def energy_chunk(self, c: int) -> np.ndarray:
        """Energies of the states ``c*chunk_size ... (c+1)*chunk_size - 1``."""
        p = self.params
        size = self.chunk_size
        out = np.zeros(size)
        for level, (a_i, bits) in enumerate(zip(p.a, p.prefix_bits), start=1):
            if bits <= CHUNK_BITS:
                # whole table fits in one chunk; the state range tiles it
                out.reshape(-1, 1 << bits)[:] += math.sqrt(a_i) * self.table_chunk(level, 0)
            else:
                tc = (c * size) % (1 << bits) >> CHUNK_BITS
                out += math.sqrt(a_i) * self.table_chunk(level, tc)
        out *= math.sqrt(p.N / 2)
        return out

    def energy_chunks(self) -> Iterator[np.ndarray]:
        for c in range(self.n_chunks):
            yield self.energy_chunk(c)

    @cached_property
    def energies(self) -> np.ndarray:
        """Flat energy table over all ``2**N`` states (only for ``N <= FLAT_MAX``)."""
        if self.params.N > FLAT_MAX:
            raise CapacityError(f"flat energy table limited to N <= {FLAT_MAX}; stream energy_chunks() instead")
        e = np.concatenate(list(self.energy_chunks()))
        e.setflags(write=False)
        return e


def sample_disorder(p: GremParams, seed: int, cap: int = DEFAULT_CAP) -> DisorderSample:
    if p.N > cap:
        raise CapacityError(f"N={p.N} exceeds enumeration cap {cap}")
    return DisorderSample(p, int(seed))


def energy(d: DisorderSample, s: SpinConfig) -> float:
    p = d.params
    _check_config(s, p)
    total = math.fsum(
        math.sqrt(a_i) * d.value(level, s.bits & ((1 << bits) - 1))
        for level, (a_i, bits) in enumerate(zip(p.a, p.prefix_bits), start=1)
    )
    return math.sqrt(p.N / 2) * total
