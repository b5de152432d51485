"""Level-alpha goodness-of-fit tests based on the weighted Wasserstein statistic.

The core decision rule rejects the null when ``n * W2^2(P_n, P)`` exceeds a
critical value. Three critical-value sources are supported:

* ``TabulatedCritical`` - a known quantile of the null limit law (for the
  uniform null with uniform weight, 0.46136 at level 0.05);
* ``LimitLawCritical`` - Monte Carlo simulation of the null limit law;
* ``ResamplingCritical`` - the finite-n reference distribution obtained by
  redrawing samples of the same size from the null itself (the route to use
  when the null is only available as data).

Two resampling conventions coexist deliberately: :func:`run_test` and its
reference draws work with the scaled, squared statistic ``n * W2^2``, while
:func:`resampling_critical_value` / :func:`resampling_power` work with the
plain distance ``W2`` (unsquared, not scaled by n), which is the natural
scale for comparing a fixed reference sample against subsamples of varying
size. A Kolmogorov-Smirnov statistic is included as a comparator.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from ._seeds import derive_rng, derive_seed
from .distributions import (
    AnalyticDistribution,
    Distribution,
    EmpiricalDistribution,
    _open_uniforms,
)
from .errors import ParameterError
from .limitlaw import BridgeGrid, LimitLawSampler, _order_stat_quantile, sample_psi_null
from .transport import (
    WeightMeasure,
    lebesgue,
    plan_scaled_statistic,
    scaled_statistics,
    w2_weighted_squared,
)

__all__ = [
    "wasserstein_statistic",
    "ks_statistic",
    "TabulatedCritical",
    "LimitLawCritical",
    "ResamplingCritical",
    "TestConfig",
    "TestOutcome",
    "run_test",
    "resampling_critical_value",
    "resampling_power",
]

_ROW_BUDGET = 8_000_000  # scalars per batched block of resamples


def _warn_if_assumption_violated(null: Distribution, omega: WeightMeasure) -> None:
    if isinstance(null, AnalyticDistribution) and not null.compact_support_ok:
        extra = (" (computing on the trimmed window)" if omega.trim > 0.0 else
                 "; consider truncating it or trimming the weight measure")
        warnings.warn(
            f"null {null.name} lacks a continuous density bounded away from zero on a "
            f"compact support; the asymptotic null law may not apply{extra}",
            stacklevel=3,
        )


def wasserstein_statistic(samples: EmpiricalDistribution, null: Distribution,
                          omega: WeightMeasure | None = None) -> float:
    """Scaled squared distance ``n * W2^2`` between the sample and the null."""
    omega = omega if omega is not None else lebesgue()
    _warn_if_assumption_violated(null, omega)
    return samples.n * w2_weighted_squared(samples, null, omega)


def ks_statistic(samples: EmpiricalDistribution, null: Distribution) -> float:
    """Scaled Kolmogorov-Smirnov statistic ``sqrt(n) * sup |F_n - F|``.

    The supremum is attained at sample points and computed there exactly.
    """
    values = samples.values
    n = samples.n
    if isinstance(null, EmpiricalDistribution):
        f = null.cdf(values)
    else:
        f = null.cdf_fn(values)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return math.sqrt(n) * float(max(d_plus, d_minus))


def ks_statistics_sorted(sorted_samples: np.ndarray, null: Distribution) -> np.ndarray:
    """KS statistics for each row of a matrix of sorted samples."""
    x = np.atleast_2d(np.asarray(sorted_samples, dtype=float))
    n = x.shape[1]
    cdf = null.cdf if isinstance(null, EmpiricalDistribution) else null.cdf_fn
    f = cdf(x.ravel()).reshape(x.shape)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f, axis=1)
    d_minus = np.max(f - (i - 1) / n, axis=1)
    return math.sqrt(n) * np.maximum(d_plus, d_minus)


# ---------------------------------------------------------------------------
# Test configuration and outcome
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TabulatedCritical:
    """A known critical value; reference draws are still simulated for the p-value."""

    value: float
    reference_reps: int = 20_000
    grid_k: int = 2048

    def __post_init__(self):
        if self.value <= 0.0:
            raise ParameterError("tabulated critical value must be positive")


@dataclass(frozen=True)
class LimitLawCritical:
    """Critical value from Monte Carlo simulation of the null limit law."""

    reps: int = 100_000
    grid_k: int = 4096


@dataclass(frozen=True)
class ResamplingCritical:
    """Critical value from redrawing same-size samples from the null itself."""

    reps: int = 1000
    replace: bool = True


CriticalSource = Union[TabulatedCritical, LimitLawCritical, ResamplingCritical]


@dataclass(frozen=True)
class TestConfig:
    __test__ = False  # not a pytest class despite the name

    null_dist: Distribution
    omega: WeightMeasure = None  # type: ignore[assignment]
    alpha: float = 0.05
    critical_source: CriticalSource = None  # type: ignore[assignment]

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.omega is None:
            object.__setattr__(self, "omega", lebesgue())
        if self.critical_source is None:
            object.__setattr__(self, "critical_source", LimitLawCritical())


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False  # not a pytest class despite the name

    statistic: float
    critical_value: float
    reject: bool
    p_value: float
    n: int
    provenance: dict

    def __post_init__(self):
        assert self.reject == (self.statistic > self.critical_value)


def _limit_sampler(config: TestConfig, grid_k: int, seed: int) -> LimitLawSampler:
    null = config.null_dist
    if not isinstance(null, AnalyticDistribution) or null.density_fn is None:
        raise ParameterError(
            "tabulated/limit-law critical sources need an analytic null with a density; "
            "use a resampling source for data-defined nulls")
    return LimitLawSampler.from_distributions(
        null, omega=config.omega, grid=BridgeGrid(grid_k),
        seed=derive_seed(seed, "limitlaw-reference"))


def _resample_sorted_blocks(null: Distribution, n: int, reps: int,
                            rng: np.random.Generator, replace: bool = True):
    """Yield blocks of sorted samples of size n drawn from the null."""
    rows = max(1, _ROW_BUDGET // max(n, 1))
    done = 0
    while done < reps:
        m = min(rows, reps - done)
        if isinstance(null, EmpiricalDistribution):
            if replace:
                idx = rng.integers(0, null.n, size=(m, n))
                block = null.values[idx]
            else:
                if n > null.n:
                    raise ParameterError(
                        f"cannot subsample {n} from {null.n} observations without replacement")
                block = np.stack([
                    rng.choice(null.values, size=n, replace=False) for _ in range(m)
                ])
        else:
            u = _open_uniforms(rng, m * n).reshape(m, n)
            block = null.quantile_fn(u)
        block.sort(axis=1)
        yield block
        done += m


def run_test(samples: EmpiricalDistribution, config: TestConfig,
             seed: int = 0) -> TestOutcome:
    """Run the goodness-of-fit test and assemble the decision with provenance.

    Deterministic given ``seed``: the reference draws behind the critical
    value and the Monte Carlo p-value derive all their randomness from it.
    The p-value uses the add-one estimator ``(1 + #{ref >= stat}) / (reps + 1)``
    and is therefore never exactly zero.
    """
    stat = wasserstein_statistic(samples, config.null_dist, config.omega)
    source = config.critical_source
    provenance: dict = {
        "seed": int(seed),
        "null": _describe_dist(config.null_dist),
        "omega": config.omega.describe(),
        "alpha": config.alpha,
    }

    if isinstance(source, TabulatedCritical):
        sampler = _limit_sampler(config, source.grid_k, seed)
        reference = sample_psi_null(sampler, source.reference_reps)
        critical = float(source.value)
        provenance.update(source="tabulated", reps=source.reference_reps,
                          grid_k=source.grid_k)
    elif isinstance(source, LimitLawCritical):
        if (1.0 - config.alpha) * source.reps < 10.0:
            raise ParameterError("insufficient reps for the limit-law critical value")
        sampler = _limit_sampler(config, source.grid_k, seed)
        reference = sample_psi_null(sampler, source.reps)
        critical = _order_stat_quantile(reference, config.alpha)
        provenance.update(source="limitlaw", reps=source.reps, grid_k=source.grid_k)
    elif isinstance(source, ResamplingCritical):
        if source.reps < 100:
            raise ParameterError("insufficient reference draws: resampling needs reps >= 100")
        rng = derive_rng(seed, "resampling-reference")
        plan = plan_scaled_statistic(config.null_dist, config.omega, samples.n)
        parts = [scaled_statistics(block, plan)
                 for block in _resample_sorted_blocks(config.null_dist, samples.n,
                                                      source.reps, rng, source.replace)]
        reference = np.concatenate(parts)
        critical = _order_stat_quantile(reference, config.alpha)
        provenance.update(source="resampling", reps=source.reps, replace=source.replace)
    else:
        raise ParameterError(f"unknown critical source {source!r}")

    p_value = (1.0 + int(np.count_nonzero(reference >= stat))) / (reference.size + 1.0)
    return TestOutcome(
        statistic=float(stat),
        critical_value=float(critical),
        reject=bool(stat > critical),
        p_value=float(p_value),
        n=samples.n,
        provenance=provenance,
    )


def _describe_dist(dist: Distribution) -> str:
    if isinstance(dist, EmpiricalDistribution):
        return f"empirical(n={dist.n})"
    return dist.name


# ---------------------------------------------------------------------------
# Resampling-based critical values and power (plain-distance convention)
# ---------------------------------------------------------------------------

def _distances_to_reference(reference: EmpiricalDistribution, n: int, reps: int,
                            rng: np.random.Generator, source: Distribution,
                            replace: bool) -> np.ndarray:
    plan = plan_scaled_statistic(reference, lebesgue(), n)
    parts = []
    for block in _resample_sorted_blocks(source, n, reps, rng, replace):
        scaled = scaled_statistics(block, plan)
        parts.append(np.sqrt(np.maximum(scaled, 0.0) / n))
    return np.concatenate(parts)


def resampling_critical_value(reference: EmpiricalDistribution, n: int, alpha: float,
                              reps: int, seed: int = 0, replace: bool = True) -> float:
    """(1 - alpha)-quantile of ``W2(reference, subsample of size n)``.

    The subsamples are drawn from the reference itself (with replacement by
    default), so this is the finite-n null reference distribution of the
    plain distance between the reference and an n-point sample of it.
    """
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if n < 1:
        raise ParameterError("subsample size must be >= 1")
    k = int(math.ceil((1.0 - alpha) * reps))
    if reps < 1 or k >= reps:
        raise ParameterError(
            f"reps={reps} too small to resolve the {1 - alpha:g}-quantile at alpha={alpha:g}")
    rng = derive_rng(seed, "resampling-critval")
    dist = _distances_to_reference(reference, n, reps, rng, reference, replace)
    return _order_stat_quantile(dist, alpha)


def resampling_power(reference: EmpiricalDistribution, shifted: EmpiricalDistribution,
                     n: int, alpha: float, trials: int, reps: int,
                     seed: int = 0, replace: bool = True) -> float:
    """Power of the resampling test against subsamples of a shifted sample.

    Fraction of ``trials`` subsamples of size n from ``shifted`` whose
    distance to the reference exceeds the resampling critical value at
    level alpha.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    critical = resampling_critical_value(reference, n, alpha, reps,
                                         seed=derive_seed(seed, "null-critval"),
                                         replace=replace)
    rng = derive_rng(seed, "alt-trials")
    dist = _distances_to_reference(reference, n, trials, rng, shifted, replace)
    return float(np.mean(dist > critical))
