import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize as sciopt

from remgrem.bounds import (
    BETA_C,
    LN2,
    DegenerateParamsError,
    DegenerateParamsWarning,
    VariationalPoint,
    closed_form_point,
    critical_temperatures,
    grem_decomposition,
    grem_objective,
    isotonic_projection,
    numeric_optimize,
    optimize,
    q_grem,
    q_rem,
    rem_objective,
)
from remgrem.model import GremParams, ParameterError
from remgrem.rng import generator
from remgrem.verify import random_nondegenerate_params

P2 = GremParams((0.6, 0.4), (0.5, 0.5), 16)


def test_beta_c_value():
    assert BETA_C == pytest.approx(1.6651092223153954, rel=1e-15)


def test_rem_objective_examples():
    assert rem_objective(1.0, 0.0) == LN2
    assert rem_objective(1.0, BETA_C) == pytest.approx(2 * LN2, rel=1e-15)
    with pytest.raises(ParameterError):
        rem_objective(0.0, 1.0)
    with pytest.raises(ParameterError):
        rem_objective(1.5, 1.0)


def test_rem_minimizer_by_scalar_search():
    beta = 2 * BETA_C
    res = sciopt.minimize_scalar(lambda m: rem_objective(m, beta), bounds=(1e-6, 1.0), method="bounded", options={"xatol": 1e-10})
    assert res.x == pytest.approx(0.5, abs=1e-6)
    assert res.fun == pytest.approx(beta * math.sqrt(LN2), rel=1e-12)


def test_q_rem_examples():
    assert q_rem(0.0) == LN2
    left = BETA_C**2 / 4 + LN2
    right = BETA_C * math.sqrt(LN2)
    assert left == pytest.approx(2 * LN2, rel=1e-15)
    assert right == pytest.approx(2 * LN2, rel=1e-15)
    assert q_rem(BETA_C) == pytest.approx(2 * LN2, rel=1e-15)
    assert q_rem(2 * BETA_C) == pytest.approx(4 * LN2, rel=1e-15)


def test_q_rem_is_c1_at_beta_c():
    h = 1e-6
    left = (q_rem(BETA_C - h) - q_rem(BETA_C - 2 * h)) / h
    right = (q_rem(BETA_C + 2 * h) - q_rem(BETA_C + h)) / h
    assert left == pytest.approx(right, abs=1e-5)


@given(st.floats(0.0, 10.0))
def test_q_rem_is_infimum(beta):
    grid = np.linspace(1e-3, 1.0, 4001)
    vals = grid * beta * beta / 4 + LN2 / grid
    assert q_rem(beta) <= vals.min() + 1e-12
    assert q_rem(beta) >= vals.min() - 1e-3 * (1 + beta)


def test_critical_temperatures_ordered():
    t = critical_temperatures(P2)
    assert t.beta_c == BETA_C
    assert t.beta_star[0] < t.beta_star[1]
    assert t.beta_star[0] == pytest.approx(BETA_C * math.sqrt(0.5 / 0.6), rel=1e-15)


def test_variational_point_validation():
    VariationalPoint((0.2, 0.2, 1.0))
    for bad in [(), (0.0, 0.5), (0.6, 0.5), (0.5, 1.1)]:
        with pytest.raises(ParameterError):
            VariationalPoint(bad)


def test_grem_objective_examples():
    rem = GremParams.rem(10)
    for m in (0.2, 0.7, 1.0):
        assert grem_objective((m,), 1.3, rem) == pytest.approx(rem_objective(m, 1.3), rel=1e-15)
    assert grem_objective((1.0, 1.0), 2.0, P2) == pytest.approx(LN2 + 1.0, rel=1e-15)
    assert grem_objective((0.5, 1.0), 2.0, P2) == pytest.approx(1.5 * LN2 + 0.7, rel=1e-15)
    with pytest.raises(ParameterError):
        grem_objective((0.5,), 2.0, P2)


def test_optimize_low_temperature_branch():
    point, value = optimize(1.0, P2)
    assert point.m == (1.0, 1.0)
    assert value == pytest.approx(LN2 + 0.25, rel=1e-15)


def test_optimize_rem_calculus_oracle():
    point, value = optimize(2 * BETA_C, GremParams.rem(4))
    assert point.m == pytest.approx((0.5,), abs=1e-15)
    assert value == pytest.approx(4 * LN2, rel=1e-15)


def test_q_grem_examples():
    assert q_grem(0.0, P2) == pytest.approx(LN2, abs=1e-15)
    stars = critical_temperatures(P2).beta_star
    beta = 2 * stars[-1]
    want = sum(0.5 * a * beta * b for a, b in zip(P2.a, stars))
    assert q_grem(beta, P2) == pytest.approx(want, rel=1e-14)


def test_q_grem_continuous_at_transitions():
    for b in critical_temperatures(P2).beta_star:
        eps = 1e-13
        assert q_grem(b - eps, P2) == pytest.approx(q_grem(b + eps, P2), abs=1e-12)


def test_q_grem_degenerate_refused():
    p = GremParams((0.4, 0.6), (0.5, 0.5), 16)
    with pytest.raises(DegenerateParamsError):
        q_grem(1.0, p)
    with pytest.raises(DegenerateParamsError):
        closed_form_point(1.0, p)
    with pytest.raises(DegenerateParamsError):
        grem_decomposition(1.0, p)


def test_decomposition_examples():
    rem = GremParams.rem(3)
    for beta in (0.0, 1.0, 3.0):
        assert grem_decomposition(beta, rem) == pytest.approx(q_rem(beta), rel=1e-15)
    assert grem_decomposition(0.0, P2) == pytest.approx(LN2, rel=1e-15)


def test_decomposition_matches_q_grem_random_params():
    rng = generator(5, 0)
    for _ in range(5):
        p = random_nondegenerate_params(rng, int(rng.integers(2, 5)))
        top = critical_temperatures(p).beta_star[-1]
        for beta in np.linspace(0, 2 * top, 100):
            assert abs(q_grem(beta, p) - grem_decomposition(beta, p)) <= 1e-12


def test_q_grem_equals_objective_at_optimum():
    for beta in np.linspace(0, 5, 21):
        point, value = optimize(float(beta), P2)
        assert value == pytest.approx(q_grem(float(beta), P2), abs=1e-12)


def _random_feasible(rng, n):
    return np.sort(rng.uniform(1e-3, 1.0, n))


def test_closed_form_is_minimal():
    rng = np.random.default_rng(3)
    for beta in (0.5, 1.8, 3.0, 6.0):
        _, best = optimize(beta, P2)
        trial = min(grem_objective(_random_feasible(rng, 2), beta, P2) for _ in range(1000))
        assert best <= trial + 1e-12


def test_objective_convex_along_feasible_segments():
    rng = np.random.default_rng(4)
    p = GremParams((0.5, 0.3, 0.2), (0.2, 0.3, 0.5), 10)
    for _ in range(200):
        x, y = _random_feasible(rng, 3), _random_feasible(rng, 3)
        beta = rng.uniform(0, 5)
        f = [grem_objective(x + t * (y - x), beta, p) for t in (0.0, 0.5, 1.0)]
        assert f[0] + f[2] - 2 * f[1] >= -1e-12


def test_isotonic_projection_against_slsqp():
    rng = np.random.default_rng(6)
    for _ in range(20):
        y = rng.normal(size=6)
        w = rng.uniform(0.1, 2.0, 6)
        got = isotonic_projection(y, w)
        assert np.all(np.diff(got) >= -1e-15)
        cons = {"type": "ineq", "fun": lambda x: np.diff(x)}
        ref = sciopt.minimize(lambda x: np.sum(w * (x - y) ** 2), np.sort(y), constraints=[cons], method="SLSQP", options={"ftol": 1e-14})
        assert np.sum(w * (got - y) ** 2) <= np.sum(w * (ref.x - y) ** 2) + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.0, 8.0))
def test_numeric_matches_closed_form(seed, beta):
    p = random_nondegenerate_params(generator(seed, 0), 3)
    _, closed = optimize(beta, p)
    point, numeric = numeric_optimize(beta, p)
    assert abs(closed - numeric) <= 1e-6
    assert all(x <= y for x, y in zip(point.m, point.m[1:]))


def test_degenerate_falls_back_with_warning():
    p = GremParams((0.4, 0.6), (0.5, 0.5), 16)
    with pytest.warns(DegenerateParamsWarning):
        point, value = optimize(4.0, p)
    # equal ratios collapse to the REM at one pooled m
    assert point.m[0] == pytest.approx(point.m[1], abs=1e-6)
    assert value == pytest.approx(q_rem(4.0), abs=1e-8)


def test_degenerate_value_beats_random_points():
    p = GremParams((0.3, 0.7), (0.6, 0.4), 10)
    rng = np.random.default_rng(8)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateParamsWarning)
        _, value = optimize(2.5, p)
    trial = min(grem_objective(_random_feasible(rng, 2), 2.5, p) for _ in range(2000))
    assert value <= trial + 1e-9


@given(st.floats(0.0, 6.0), st.floats(0.0, 6.0))
def test_q_monotone(b1, b2):
    lo, hi = sorted((b1, b2))
    assert q_rem(lo) <= q_rem(hi) + 1e-15
    assert q_grem(lo, P2) <= q_grem(hi, P2) + 1e-15
