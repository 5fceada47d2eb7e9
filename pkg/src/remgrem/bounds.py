"""Closed-form pressures and the variational bound over ordered m-vectors."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import GremParams, ParameterError

LN2 = math.log(2.0)
BETA_C = 2.0 * math.sqrt(LN2)


class DegenerateParamsError(ParameterError):
    """kappa_i / a_i is not strictly increasing, so no closed form applies."""


class DegenerateParamsWarning(UserWarning):
    pass


@dataclass(frozen=True)
class VariationalPoint:
    """Ordered vector 0 < m_1 <= ... <= m_n <= 1.

    m_i = 1 is allowed: the infimum over m_i < 1 is reached in the closure.
    """

    m: tuple[float, ...]

    def __post_init__(self):
        m = tuple(float(x) for x in self.m)
        object.__setattr__(self, "m", m)
        if not m:
            raise ParameterError("empty variational point")
        if not all(0 < x <= 1 for x in m):
            raise ParameterError(f"m must lie in (0, 1]: {m}")
        if any(x > y for x, y in zip(m, m[1:])):
            raise ParameterError(f"m must be nondecreasing: {m}")


@dataclass(frozen=True)
class CriticalTemps:
    beta_c: float
    beta_star: tuple[float, ...]


def critical_temperatures(p: GremParams) -> CriticalTemps:
    return CriticalTemps(BETA_C, tuple(BETA_C * math.sqrt(k / a) for k, a in zip(p.kappa, p.a)))


def rem_objective(m: float, beta: float) -> float:
    if not 0 < m <= 1:
        raise ParameterError(f"m must lie in (0, 1], got {m}")
    return m * beta * beta / 4 + LN2 / m


def q_rem(beta: float) -> float:
    """Infimum of rem_objective over m: the REM pressure in the large-N limit."""
    if beta < 0:
        raise ParameterError(f"beta must be >= 0, got {beta}")
    if beta < BETA_C:
        return beta * beta / 4 + LN2
    return beta * math.sqrt(LN2)


def grem_objective(m: VariationalPoint | Sequence[float], beta: float, p: GremParams) -> float:
    if not isinstance(m, VariationalPoint):
        m = VariationalPoint(tuple(m))
    if len(m.m) != p.n:
        raise ParameterError(f"m has {len(m.m)} entries, model has {p.n} levels")
    return math.fsum(k / mi * LN2 + beta * beta / 4 * mi * a for mi, k, a in zip(m.m, p.kappa, p.a))


def _require_nondegenerate(p: GremParams) -> None:
    if not p.nondegenerate:
        ratios = [k / a for k, a in zip(p.kappa, p.a)]
        raise DegenerateParamsError(f"kappa/a must be strictly increasing, got {ratios}")


def closed_form_point(beta: float, p: GremParams) -> VariationalPoint:
    _require_nondegenerate(p)
    if beta < 0:
        raise ParameterError(f"beta must be >= 0, got {beta}")
    stars = critical_temperatures(p).beta_star
    if beta == 0:
        return VariationalPoint((1.0,) * p.n)
    return VariationalPoint(tuple(min(1.0, b / beta) for b in stars))


def isotonic_projection(y, w=None) -> np.ndarray:
    """Weighted least-squares projection onto nondecreasing sequences (pool adjacent violators)."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
    vals, weights, sizes = [], [], []
    for yi, wi in zip(y, w):
        vals.append(yi)
        weights.append(wi)
        sizes.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            wt = weights[-2] + weights[-1]
            v = (weights[-2] * vals[-2] + weights[-1] * vals[-1]) / wt
            s = sizes[-2] + sizes[-1]
            del vals[-2:], weights[-2:], sizes[-2:]
            vals.append(v)
            weights.append(wt)
            sizes.append(s)
    return np.repeat(vals, sizes)


def numeric_optimize(
    beta: float,
    p: GremParams,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    lower: float = 1e-9,
) -> tuple[VariationalPoint, float]:
    """Minimize grem_objective over the ordered box by projected Newton steps.

    The objective is separable and convex, so each step uses the diagonal
    Hessian as the metric; projecting in that metric is a weighted isotonic
    regression followed by clipping to [lower, 1].
    """
    kappa = np.asarray(p.kappa)
    a = np.asarray(p.a)
    b2 = beta * beta / 4

    def f(m):
        return math.fsum(kappa * LN2 / m + b2 * a * m)

    m = np.ones(p.n)
    fm = f(m)
    for _ in range(max_iter):
        grad = -kappa * LN2 / m**2 + b2 * a
        hess = 2 * kappa * LN2 / m**3
        step = 1.0
        while True:
            cand = np.clip(isotonic_projection(m - step * grad / hess, hess), lower, 1.0)
            fc = f(cand)
            if fc <= fm + 1e-4 * float(grad @ (cand - m)) or step < 1e-12:
                break
            step /= 2
        if fc > fm:
            break
        moved = float(np.max(np.abs(cand - m)))
        m, fm = cand, fc
        if moved < tol:
            break
    m = np.maximum.accumulate(m)
    point = VariationalPoint(tuple(m))
    return point, grem_objective(point, beta, p)


def optimize(beta: float, p: GremParams) -> tuple[VariationalPoint, float]:
    """Minimizer of the variational bound and its value.

    Uses m_i = min(1, beta_i*/beta) when the transition temperatures are
    strictly ordered; otherwise warns and falls back to the numeric search,
    whose minimizer need not be unique.
    """
    if p.nondegenerate:
        point = closed_form_point(beta, p)
        return point, grem_objective(point, beta, p)
    warnings.warn(
        "kappa/a not strictly increasing; using numeric search (minimizer may not be unique)",
        DegenerateParamsWarning,
        stacklevel=2,
    )
    return numeric_optimize(beta, p)


def q_grem(beta: float, p: GremParams) -> float:
    """Piecewise closed form of the optimal GREM bound."""
    _require_nondegenerate(p)
    if beta < 0:
        raise ParameterError(f"beta must be >= 0, got {beta}")
    stars = critical_temperatures(p).beta_star
    terms = []
    for a_k, k_k, b_k in zip(p.a, p.kappa, stars):
        if b_k <= beta:
            terms.append(0.5 * a_k * beta * b_k)
        else:
            # a_k (beta_k*)^2 / 4 == kappa_k ln 2, written so beta = 0 gives ln 2 to rounding
            terms.append(k_k * LN2 + 0.25 * a_k * beta * beta)
    return math.fsum(terms)


def grem_decomposition(beta: float, p: GremParams) -> float:
    """sum_i kappa_i * q_rem(sqrt(a_i / kappa_i) * beta)."""
    _require_nondegenerate(p)
    return math.fsum(k * q_rem(math.sqrt(a / k) * beta) for a, k in zip(p.a, p.kappa))
