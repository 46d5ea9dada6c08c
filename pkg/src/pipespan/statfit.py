"""Distribution fitting and goodness-of-fit tests for runtime samples.

Candidate models for observed run times are a uniform law with endpoints
taken from the sample extremes, an exponential law with the rate from
maximum likelihood (rate = 1/mean), and a log-normal law checked by a
Lilliefors-style normality test on the log-transformed, standardized
sample. The quadratic empirical-vs-hypothesized cdf discrepancy

    T = 1/(12n) + sum_i [ (2i-1)/(2n) - F(X_i) ]**2

is compared against the asymptotic critical value for a fully specified
hypothesis; estimating parameters from the same sample shifts the null
distribution downward, which makes those comparisons conservative. The
report notes this.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .distributions import Exponential, Uniform, WaitingDistribution, harmonic_number

__all__ = [
    "DegenerateFitError",
    "SampleSet",
    "SummaryStats",
    "TestResult",
    "CandidateFit",
    "FitReport",
    "load_samples",
    "summary_stats",
    "fit_uniform",
    "fit_exponential_mle",
    "cramer_von_mises",
    "lilliefors_lognormal",
    "empirical_cdf",
    "classify",
]


class DegenerateFitError(ValueError):
    """A candidate distribution cannot be fit to this sample (e.g. zero spread)."""


class SampleSet:
    """Observed run times, kept sorted ascending.

    Values must be strictly positive and finite; at least two are required.
    Ties are allowed (timers have finite resolution).
    """

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size < 2:
            raise ValueError("need at least two samples")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        if np.any(arr <= 0.0):
            raise ValueError("run times must be strictly positive")
        arr = np.sort(arr)
        arr.flags.writeable = False
        self.values = arr

    @property
    def n(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"SampleSet(n={self.n}, min={self.values[0]:g}, max={self.values[-1]:g})"


def load_samples(path) -> SampleSet:
    """Read samples from a text file.

    Accepted layouts: one duration per line, or two-column CSV rows
    ``run-id,seconds``. Blank lines and ``#`` comments are ignored.
    """
    values = []
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        token = fields[1] if len(fields) == 2 else fields[0]
        try:
            values.append(float(token))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: cannot parse duration from {raw!r}") from None
    if not values:
        raise ValueError(f"{path}: no samples found")
    return SampleSet(values)


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    median: float
    std: float
    variance: float
    exp_rate: float
    minimum: float
    maximum: float


def summary_stats(samples: SampleSet) -> SummaryStats:
    """Sample mean/median/spread plus the maximum-likelihood exponential rate.

    The median averages the two central order statistics for even n, the
    standard deviation uses the n-1 denominator, and the variance is the
    square of the reported std so the two stay consistent to the last bit.
    """
    v = samples.values
    mean = float(v.mean())
    std = float(v.std(ddof=1))
    return SummaryStats(
        mean=mean,
        median=float(np.median(v)),
        std=std,
        variance=std * std,
        exp_rate=1.0 / mean,
        minimum=float(v[0]),
        maximum=float(v[-1]),
    )


def fit_uniform(samples: SampleSet) -> Uniform:
    """Uniform law with endpoints at the sample minimum and maximum."""
    lo, hi = float(samples.values[0]), float(samples.values[-1])
    if not lo < hi:
        raise DegenerateFitError("all samples equal; uniform fit is degenerate")
    return Uniform(lo, hi)


def fit_exponential_mle(samples: SampleSet) -> Exponential:
    """Exponential law with the maximum-likelihood rate n / sum(X)."""
    return Exponential(1.0 / float(samples.values.mean()))


@dataclass(frozen=True)
class TestResult:
    statistic: float
    n: int
    alpha: float
    critical_value: float
    reject: bool


# Asymptotic upper percentage points of the quadratic ECDF statistic for a
# fully specified hypothesis.
_CVM_CRITICAL = {0.10: 0.347, 0.05: 0.461, 0.025: 0.581, 0.01: 0.743}

# Large-n Lilliefors coefficients; the critical value is
# c(alpha) / (sqrt(n) + 0.12 + 0.11/sqrt(n)).
_LILLIEFORS_C = {0.10: 0.819, 0.05: 0.895, 0.01: 1.035}


def _lookup(table: dict, alpha: float, name: str) -> float:
    try:
        return table[alpha]
    except KeyError:
        levels = ", ".join(str(a) for a in sorted(table))
        raise ValueError(f"{name} supports alpha in {{{levels}}}, got {alpha}") from None


def cramer_von_mises(samples: SampleSet, dist: WaitingDistribution,
                     alpha: float = 0.05) -> TestResult:
    """Quadratic ECDF discrepancy between the sample and a hypothesized law.

    Parameters
    ----------
    samples : SampleSet
        Observations, sorted ascending (ties kept as-is).
    dist : WaitingDistribution
        Hypothesized distribution; its cdf is evaluated at each sample.
    alpha : float
        Significance level for the reject decision.

    Returns
    -------
    TestResult
        ``reject`` is True when the statistic exceeds the tabulated value.
        The statistic can never fall below 1/(12n), attained exactly when
        F(X_i) = (2i-1)/(2n) for every i.
    """
    v = samples.values
    n = v.size
    F = np.asarray(dist.cdf(v), dtype=float)
    targets = (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)
    statistic = 1.0 / (12.0 * n) + float(np.sum((targets - F) ** 2))
    critical = _lookup(_CVM_CRITICAL, alpha, "cramer_von_mises")
    return TestResult(statistic=statistic, n=n, alpha=alpha,
                      critical_value=critical, reject=statistic > critical)


def lilliefors_lognormal(samples: SampleSet, alpha: float = 0.05) -> TestResult:
    """Sup-distance normality test on the standardized log sample.

    The logs are centered and scaled by their own sample mean and standard
    deviation (n-1 denominator), then the largest one-sided gap between the
    standard normal cdf and the empirical step function is taken on both
    sides of every sample point. Scaling the samples by a positive constant
    shifts the logs uniformly and is absorbed by the standardization.
    """
    n = samples.n
    if n < 4:
        raise ValueError("lilliefors test needs at least 4 samples")
    z = np.log(samples.values)
    z = (z - z.mean()) / z.std(ddof=1)
    F = ndtr(z)
    i = np.arange(1, n + 1)
    d_plus = float(np.max(i / n - F))
    d_minus = float(np.max(F - (i - 1) / n))
    statistic = max(d_plus, d_minus)
    c = _lookup(_LILLIEFORS_C, alpha, "lilliefors_lognormal")
    root = np.sqrt(n)
    critical = c / (root + 0.12 + 0.11 / root)
    return TestResult(statistic=statistic, n=n, alpha=alpha,
                      critical_value=critical, reject=statistic > critical)


def empirical_cdf(samples: SampleSet) -> list[tuple[float, float]]:
    """Plot-ready points (x, fraction of samples <= x), one per distinct value."""
    values, counts = np.unique(samples.values, return_counts=True)
    fractions = np.cumsum(counts) / samples.n
    return [(float(x), float(p)) for x, p in zip(values, fractions)]


@dataclass(frozen=True)
class CandidateFit:
    name: str
    params: dict
    result: TestResult


@dataclass(frozen=True)
class FitReport:
    n: int
    alpha: float
    summary: SummaryStats
    candidates: tuple[CandidateFit, ...]
    speedup_bound: float | None
    speedup_bound_processes: int | None
    notes: tuple[str, ...] = field(default_factory=tuple)

    def rejected(self, name: str) -> bool:
        for cand in self.candidates:
            if cand.name == name:
                return cand.result.reject
        raise KeyError(name)


_ESTIMATION_NOTE = (
    "candidate parameters are estimated from the sample; the thresholds "
    "assume a fully specified hypothesis and are conservative here"
)


def classify(samples: SampleSet, alpha: float = 0.05,
             processes: int | None = None) -> FitReport:
    """Fit and test all candidate distributions against the sample.

    Runs the uniform and exponential fits through the quadratic ECDF test
    and the log-normal candidate through the Lilliefors test. When
    ``processes`` is given and the exponential candidate is not rejected,
    the report includes the implied barrier-free speedup bound (the
    harmonic number of the process count).
    """
    if samples.n < 4:
        raise ValueError("classification needs at least 4 samples")
    uniform = fit_uniform(samples)
    exponential = fit_exponential_mle(samples)
    candidates = (
        CandidateFit("uniform", {"a": uniform.a, "b": uniform.b},
                     cramer_von_mises(samples, uniform, alpha)),
        CandidateFit("exponential", {"rate": exponential.rate},
                     cramer_von_mises(samples, exponential, alpha)),
        CandidateFit("lognormal",
                     _lognormal_params(samples),
                     lilliefors_lognormal(samples, alpha)),
    )
    bound = None
    if processes is not None and not candidates[1].result.reject:
        bound = harmonic_number(processes)
    return FitReport(
        n=samples.n,
        alpha=alpha,
        summary=summary_stats(samples),
        candidates=candidates,
        speedup_bound=bound,
        speedup_bound_processes=processes if bound is not None else None,
        notes=(_ESTIMATION_NOTE,),
    )


def _lognormal_params(samples: SampleSet) -> dict:
    logs = np.log(samples.values)
    return {"mu": float(logs.mean()), "sigma": float(logs.std(ddof=1))}
