"""Waiting-time distributions and the speedup from removing per-step barriers.

With stage times drawn iid from a distribution with cdf F and pdf f, the
expected per-step cost under synchronization is the expected maximum of P
draws,

    E[max] = P * integral of x * F(x)**(P-1) * f(x) dx,

while the barrier-free cost per step tends to the plain mean for long runs.
Their ratio is the asymptotic speedup. Uniform and exponential have closed
forms (the exponential one is the P-th harmonic number); log-normal is
integrated numerically after the substitution x = exp(t), which turns the
integrand into a smooth Gaussian-decay function of t.

Sampling uses the Philox counter-based generator so that seeds are portable:
uniform draws map 64-bit outputs to [0, 1), exponential uses the inverse
cdf -log(1-u)/rate, and log-normal exponentiates mu + sigma * ndtri(u).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .makespan import StepTimeMatrix
from .quadrature import integrate

__all__ = [
    "WaitingDistribution",
    "Uniform",
    "Exponential",
    "LogNormal",
    "SpeedupEstimate",
    "harmonic_number",
    "expected_max",
    "analytic_speedup",
    "sample_step_times",
    "replicate_makespans",
    "speedup_from_makespans",
    "monte_carlo_speedup",
    "parse_distribution",
    "format_distribution",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_TINY = np.finfo(float).tiny


class WaitingDistribution:
    """Mixin for shifted waiting-time distributions.

    Subclasses are frozen dataclasses providing ``_base_pdf``, ``_base_cdf``,
    ``_base_mean``, ``_base_expected_max`` and ``_base_sample`` for the
    unshifted law; the nonnegative ``shift`` field translates the support and
    models a constant computation time on top of the noise.
    """

    def _check_shift(self):
        if not (math.isfinite(self.shift) and self.shift >= 0.0):
            raise ValueError("shift must be finite and nonnegative")

    def pdf(self, x):
        """Density at ``x``; zero outside the support."""
        x = np.asarray(x, dtype=float)
        out = self._base_pdf(x - self.shift)
        return float(out) if out.ndim == 0 else out

    def cdf(self, x):
        """Distribution function at ``x``."""
        x = np.asarray(x, dtype=float)
        out = self._base_cdf(x - self.shift)
        return float(out) if out.ndim == 0 else out

    def mean(self) -> float:
        return self.shift + self._base_mean()

    def sample(self, generator, size) -> np.ndarray:
        """Draw iid values using a numpy ``Generator``."""
        return self.shift + self._base_sample(generator, size)


@dataclass(frozen=True)
class Uniform(WaitingDistribution):
    a: float
    b: float
    shift: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError("uniform requires finite a < b")
        self._check_shift()

    def _base_pdf(self, y):
        inside = (y >= self.a) & (y <= self.b)
        return np.where(inside, 1.0 / (self.b - self.a), 0.0)

    def _base_cdf(self, y):
        return np.clip((y - self.a) / (self.b - self.a), 0.0, 1.0)

    def _base_mean(self):
        return 0.5 * (self.a + self.b)

    def _base_expected_max(self, P: int) -> float:
        return (self.a + P * self.b) / (P + 1)

    def _base_sample(self, g, size):
        return self.a + (self.b - self.a) * g.random(size)


@dataclass(frozen=True)
class Exponential(WaitingDistribution):
    rate: float
    shift: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0.0):
            raise ValueError("exponential requires rate > 0")
        self._check_shift()

    def _base_pdf(self, y):
        with np.errstate(over="ignore"):
            return np.where(y >= 0.0, self.rate * np.exp(-self.rate * y), 0.0)

    def _base_cdf(self, y):
        return np.where(y >= 0.0, -np.expm1(-self.rate * np.maximum(y, 0.0)), 0.0)

    def _base_mean(self):
        return 1.0 / self.rate

    def _base_expected_max(self, P: int) -> float:
        return harmonic_number(P) / self.rate

    def _base_sample(self, g, size):
        return -np.log1p(-g.random(size)) / self.rate


@dataclass(frozen=True)
class LogNormal(WaitingDistribution):
    mu: float
    sigma: float
    shift: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValueError("log-normal requires finite mu and sigma > 0")
        self._check_shift()

    def _base_pdf(self, y):
        y = np.asarray(y, dtype=float)
        safe = np.where(y > 0.0, y, 1.0)
        z = (np.log(safe) - self.mu) / self.sigma
        dens = np.exp(-0.5 * z * z) / (safe * self.sigma * _SQRT_2PI)
        return np.where(y > 0.0, dens, 0.0)

    def _base_cdf(self, y):
        y = np.asarray(y, dtype=float)
        safe = np.where(y > 0.0, y, 1.0)
        return np.where(y > 0.0, ndtr((np.log(safe) - self.mu) / self.sigma), 0.0)

    def _base_mean(self):
        return math.exp(self.mu + 0.5 * self.sigma**2)

    def _base_expected_max(self, P: int) -> float:
        # After x = exp(mu + sigma*u) the order-statistic integrand becomes
        # P * exp(mu + sigma*u) * phi(u) * Phi(u)**(P-1): smooth, with
        # Gaussian decay centered near u = sigma, so fixed bounds of
        # [-12, sigma + 12] leave a truncation error far below the tolerance.
        mu, sigma = self.mu, self.sigma

        def integrand(u):
            phi = np.exp(-0.5 * u * u) / _SQRT_2PI
            return P * np.exp(mu + sigma * u) * phi * ndtr(u) ** (P - 1)

        value, _ = integrate(integrand, -12.0, sigma + 12.0, abs_tol=1e-9)
        return value

    def _base_sample(self, g, size):
        u = np.maximum(g.random(size), _TINY)  # keep ndtri finite
        return np.exp(self.mu + self.sigma * ndtri(u))


@dataclass(frozen=True)
class SpeedupEstimate:
    """Estimated ratio of synchronized to barrier-free expected run time."""

    value: float
    method: str  # closed_form | quadrature | monte_carlo
    ci_halfwidth: float = 0.0
    replicates: int = 0

    def __post_init__(self):
        if self.method not in ("closed_form", "quadrature", "monte_carlo"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "monte_carlo" and self.replicates <= 0:
            raise ValueError("monte_carlo estimates must record their replicate count")
        if self.value < 1.0 - self.ci_halfwidth - 1e-9:
            raise ValueError("speedup cannot credibly fall below 1")


def harmonic_number(P: int) -> float:
    """Sum of 1/i for i = 1..P, by direct summation."""
    P = _check_count(P, "P")
    return float(np.sum(1.0 / np.arange(1, P + 1, dtype=float)))


def expected_max(dist: WaitingDistribution, P: int) -> float:
    """Expected maximum of P iid draws; equals the mean at P = 1."""
    P = _check_count(P, "P")
    return dist.shift + dist._base_expected_max(P)


def analytic_speedup(dist: WaitingDistribution, P: int) -> SpeedupEstimate:
    """Asymptotic speedup E[max of P draws] / mean.

    The unshifted exponential case returns the P-th harmonic number directly
    (the rate cancels); log-normal goes through quadrature; everything else
    uses the closed forms.
    """
    P = _check_count(P, "P")
    mean = dist.mean()
    if mean <= 0.0:
        raise ValueError("speedup requires a positive mean waiting time")
    if isinstance(dist, Exponential) and dist.shift == 0.0:
        return SpeedupEstimate(value=harmonic_number(P), method="closed_form")
    method = "quadrature" if isinstance(dist, LogNormal) else "closed_form"
    return SpeedupEstimate(value=expected_max(dist, P) / mean, method=method)


def _check_count(value, name) -> int:
    as_int = int(value)
    if as_int != value or as_int < 1:
        raise ValueError(f"{name} must be a positive integer")
    return as_int


def _stream(seed: int, index: int) -> np.random.Generator:
    # Philox is counter-based; jumping by the stream index yields
    # independent, reproducible streams from one master seed.
    bg = np.random.Philox(key=seed)
    if index:
        bg = bg.jumped(index)
    return np.random.Generator(bg)


def sample_step_times(dist: WaitingDistribution, P: int, K: int, seed: int) -> StepTimeMatrix:
    """P x K matrix of iid stage-time draws; a seed pins the matrix bit-for-bit."""
    P = _check_count(P, "P")
    K = _check_count(K, "K")
    g = _stream(seed, 0)
    return StepTimeMatrix(dist.sample(g, (P, K)))


def _replicate_makespans(dist, P: int, K: int, g) -> tuple[float, float]:
    # Stream over step blocks so large P*K runs stay within memory; for
    # small runs this is a single block.
    block = max(1, 4_000_000 // P)
    sync = 0.0
    row_totals = np.zeros(P)
    done = 0
    while done < K:
        cols = min(block, K - done)
        draws = dist.sample(g, (P, cols))
        if np.any(draws < 0.0):
            raise ValueError("distribution produced negative stage times")
        sync += float(draws.max(axis=0).sum())
        row_totals += draws.sum(axis=1)
        done += cols
    return sync, float(row_totals.max())


def replicate_makespans(dist: WaitingDistribution, P: int, K: int,
                        replicates: int, seed: int,
                        threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Synchronized and barrier-free makespans of ``replicates`` fresh P x K draws.

    Replicate ``r`` uses the Philox stream ``jumped(r)`` of the master seed,
    so results are reproducible and independent of ``threads``.
    """
    P = _check_count(P, "P")
    K = _check_count(K, "K")
    if replicates < 2:
        raise ValueError("need at least 2 replicates")

    def one(index: int) -> tuple[float, float]:
        return _replicate_makespans(dist, P, K, _stream(seed, index))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pairs = list(pool.map(one, range(replicates)))
    else:
        pairs = [one(r) for r in range(replicates)]
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])


def speedup_from_makespans(sync, async_) -> SpeedupEstimate:
    """Ratio-of-means estimate from per-replicate makespans.

    The confidence halfwidth is 1.96 * std(per-replicate ratios) / sqrt(R);
    the bias of the ratio estimator is O(1/R) and negligible at the
    replicate counts used here.
    """
    sync = np.asarray(sync, dtype=float)
    async_ = np.asarray(async_, dtype=float)
    replicates = sync.size
    ratios = sync / async_
    halfwidth = 1.96 * float(ratios.std(ddof=1)) / math.sqrt(replicates)
    return SpeedupEstimate(
        value=float(sync.mean() / async_.mean()),
        method="monte_carlo",
        ci_halfwidth=halfwidth,
        replicates=int(replicates),
    )


def monte_carlo_speedup(dist: WaitingDistribution, P: int, K: int,
                        replicates: int, seed: int, threads: int = 1) -> SpeedupEstimate:
    """Monte Carlo estimate of the K-step speedup.

    Each replicate draws a fresh P x K matrix from its own Philox stream and
    contributes both makespans; the estimate is the ratio of the two means.
    Note the estimand is the finite-K speedup: the barrier-free mean exceeds
    K * mean(dist) at any finite K, so the estimate approaches the analytic
    (asymptotic) speedup only as K grows.
    """
    sync, async_ = replicate_makespans(dist, P, K, replicates, seed, threads)
    return speedup_from_makespans(sync, async_)


def parse_distribution(text: str) -> WaitingDistribution:
    """Parse ``uniform:a,b``, ``exp:lambda`` or ``lognormal:mu,sigma``.

    An optional ``+shift`` suffix translates the distribution, e.g.
    ``exp:1.5+0.2``.
    """
    body = text.strip()
    kind, sep, argtext = body.partition(":")
    kind = kind.lower()
    if not sep or not argtext:
        raise ValueError(f"malformed distribution spec {text!r}: expected kind:params")

    shift = 0.0
    head, plus, tail = argtext.rpartition("+")
    if plus:
        try:
            shift = float(tail)
            params = _parse_floats(head, text)
        except ValueError:
            # the '+' belonged to a scientific-notation exponent
            shift = 0.0
            params = _parse_floats(argtext, text)
    else:
        params = _parse_floats(argtext, text)

    if kind == "uniform":
        if len(params) != 2:
            raise ValueError(f"uniform takes two parameters, got {argtext!r}")
        return Uniform(params[0], params[1], shift=shift)
    if kind == "exp":
        if len(params) != 1:
            raise ValueError(f"exp takes one parameter, got {argtext!r}")
        return Exponential(params[0], shift=shift)
    if kind == "lognormal":
        if len(params) != 2:
            raise ValueError(f"lognormal takes two parameters, got {argtext!r}")
        return LogNormal(params[0], params[1], shift=shift)
    raise ValueError(f"unknown distribution kind {kind!r}")


def _parse_floats(text: str, original: str) -> list[float]:
    out = []
    for token in text.split(","):
        token = token.strip()
        try:
            out.append(float(token))
        except ValueError:
            raise ValueError(f"malformed distribution spec {original!r}: bad token {token!r}") from None
    return out


def format_distribution(dist: WaitingDistribution) -> str:
    """Canonical spec string for ``dist``; inverse of :func:`parse_distribution`."""
    if isinstance(dist, Uniform):
        body = f"uniform:{dist.a:g},{dist.b:g}"
    elif isinstance(dist, Exponential):
        body = f"exp:{dist.rate:g}"
    elif isinstance(dist, LogNormal):
        body = f"lognormal:{dist.mu:g},{dist.sigma:g}"
    else:
        raise TypeError(f"unknown distribution {dist!r}")
    if dist.shift:
        body += f"+{dist.shift:g}"
    return body
