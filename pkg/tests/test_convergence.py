"""Statistical checks that the finite-n functionals approach their limits.

At n = 50_000 the three building blocks of the scaled statistic are compared
against their limit-law targets by Monte Carlo moments:

* the quadratic functional (the scaled null statistic) has limit mean
  ``int u(1-u) du = 1/6`` for the uniform null with unit weight;
* the pushforward-distance functional converges to the squared distance
  between signal and null;
* the cross functional is asymptotically centered Gaussian whose variance
  is a quarter of the deterministic double-quadrature value.
"""

import math

import numpy as np

from wshift._seeds import derive_rng
from wshift.distributions import sine_distribution, uniform01
from wshift.limitlaw import case_ii_variance
from wshift.transport import lebesgue, plan_scaled_statistic, scaled_statistics, \
    w2_weighted_squared

N = 50_000
TRIALS = 300
SIGNAL_P = 0.8


def _sorted_null_samples(trials, n, rng):
    u = rng.random((trials, n)) + 2.0 ** -54
    u.sort(axis=1)
    return u


def test_quadratic_functional_mean():
    rng = derive_rng(71, "quadratic-functional")
    plan = plan_scaled_statistic(uniform01(), lebesgue(), N)
    stats = []
    for _ in range(3):
        u = _sorted_null_samples(TRIALS // 3, N, rng)
        stats.append(scaled_statistics(u, plan))
    stats = np.concatenate(stats)
    se = stats.std(ddof=1) / math.sqrt(stats.size)
    assert abs(stats.mean() - 1.0 / 6.0) <= 4.0 * se + 1e-3


def test_pushforward_distance_functional_mean():
    # empirical measure of the transported sample vs the null: limit Delta^2
    signal = sine_distribution(SIGNAL_P)
    delta_sq = w2_weighted_squared(uniform01(), signal)
    rng = derive_rng(72, "pushforward-functional")
    plan = plan_scaled_statistic(uniform01(), lebesgue(), N)
    values = []
    for _ in range(3):
        u = rng.random((TRIALS // 3, N)) + 2.0 ** -54
        t = signal.quantile_fn(u)
        t.sort(axis=1)
        values.append(scaled_statistics(t, plan) / N)
    values = np.concatenate(values)
    se = values.std(ddof=1) / math.sqrt(values.size)
    assert abs(values.mean() - delta_sq) <= 4.0 * se + 2.0 / N


def test_cross_functional_moments():
    # sqrt(n) int (F_n^{-1}(u) - u)(G^{-1}(F_n^{-1}(u)) - u) du on a fine grid
    signal = sine_distribution(SIGNAL_P)
    m = 4096
    grid = (np.arange(m) + 0.5) / m
    slot = np.clip(np.ceil(N * grid).astype(np.int64) - 1, 0, N - 1)
    rng = derive_rng(73, "cross-functional")
    draws = []
    for _ in range(3):
        u = _sorted_null_samples(TRIALS // 3, N, rng)
        qn = u[:, slot]
        cross = math.sqrt(N) * np.mean((qn - grid) * (signal.quantile_fn(qn) - grid),
                                       axis=1)
        draws.append(cross)
    draws = np.concatenate(draws)
    target_var = case_ii_variance(uniform01(), signal) / 4.0
    se_mean = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean()) <= 4.0 * se_mean
    # variance of a variance estimate: ~ sqrt(2 / trials) relative noise
    rel_noise = 3.0 * math.sqrt(2.0 / draws.size)
    assert abs(draws.var(ddof=1) - target_var) <= (rel_noise + 0.1) * target_var
