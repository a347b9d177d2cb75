"""Noise distributions and tail-regime diagnostics.

A noise spec is a small frozen dataclass with a sampler and, for every
built-in family, closed-form survival and quantile functions.  The
diagnostics in this module probe the two tail regimes that drive market
behaviour: how fast the maximum of n draws concentrates, and whether the
conditional survival ratio Pr[X > x+d | X > x] approaches 1.
"""

from __future__ import annotations

import enum
import math
import statistics
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, DegenerateVarianceError, InsufficientTailMassError

# Classification of a distribution is a finite-sample heuristic: the regimes
# are asymptotic, so the thresholds below are calibrated to separate the
# bundled example families cleanly, not derived from first principles.
CLASSIFIER_NOTE = "threshold-based finite-sample heuristic"

DEFAULT_BETA_MIN = 0.25
DEFAULT_RATIO_MIN = 0.95
DEFAULT_PROBE_QUANTILES = (0.9, 0.99, 0.999)
DEFAULT_PROBE_GAP = 0.1

_MAX_CHUNK_DRAWS = 5_000_000


class NoiseSpec:
    """Base class for parametric noise distributions."""

    kind: str = ""

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if n < 0:
            raise ConfigError(f"n must be >= 0, got {n}")
        return self._draw(rng, n)

    def _draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def survival(self, x: float) -> float:
        """Pr[X > x]."""
        raise NotImplementedError

    def quantile(self, q: float) -> float:
        """Inverse CDF at q in (0, 1)."""
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        """(lower, upper) bounds of the support; infinite where unbounded."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        out.update({k: float(v) for k, v in self.__dict__.items()})
        return out


@dataclass(frozen=True)
class Uniform(NoiseSpec):
    lo: float = 0.0
    hi: float = 1.0
    kind = "uniform"

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ConfigError(f"uniform: hi must exceed lo, got lo={self.lo}, hi={self.hi}")

    def _draw(self, rng, n):
        return rng.uniform(self.lo, self.hi, n)

    def survival(self, x):
        return float(np.clip((self.hi - x) / (self.hi - self.lo), 0.0, 1.0))

    def quantile(self, q):
        return self.lo + q * (self.hi - self.lo)

    def support(self):
        return (self.lo, self.hi)


@dataclass(frozen=True)
class Gaussian(NoiseSpec):
    mean: float = 0.0
    sd: float = 1.0
    kind = "gaussian"

    def __post_init__(self):
        if not self.sd > 0:
            raise ConfigError(f"gaussian: sd must be positive, got sd={self.sd}")

    def _draw(self, rng, n):
        return rng.normal(self.mean, self.sd, n)

    def survival(self, x):
        return 0.5 * math.erfc((x - self.mean) / (self.sd * math.sqrt(2.0)))

    def quantile(self, q):
        return statistics.NormalDist(self.mean, self.sd).inv_cdf(q)

    def support(self):
        return (-math.inf, math.inf)


@dataclass(frozen=True)
class Exponential(NoiseSpec):
    rate: float = 1.0
    kind = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ConfigError(f"exponential: rate must be positive, got rate={self.rate}")

    def _draw(self, rng, n):
        return rng.exponential(1.0 / self.rate, n)

    def survival(self, x):
        return 1.0 if x <= 0 else math.exp(-self.rate * x)

    def quantile(self, q):
        return -math.log1p(-q) / self.rate

    def support(self):
        return (0.0, math.inf)


@dataclass(frozen=True)
class Gumbel(NoiseSpec):
    location: float = 0.0
    scale: float = 1.0
    kind = "gumbel"

    def __post_init__(self):
        if not self.scale > 0:
            raise ConfigError(f"gumbel: scale must be positive, got scale={self.scale}")

    def _draw(self, rng, n):
        return rng.gumbel(self.location, self.scale, n)

    def survival(self, x):
        return -math.expm1(-math.exp(-(x - self.location) / self.scale))

    def quantile(self, q):
        return self.location - self.scale * math.log(-math.log(q))

    def support(self):
        return (-math.inf, math.inf)


@dataclass(frozen=True)
class Pareto(NoiseSpec):
    """Classical Pareto with density supported on [scale, inf)."""

    shape: float = 2.0
    scale: float = 1.0
    kind = "pareto"

    def __post_init__(self):
        if not self.shape > 0:
            raise ConfigError(f"pareto: shape must be positive, got shape={self.shape}")
        if not self.scale > 0:
            raise ConfigError(f"pareto: scale must be positive, got scale={self.scale}")

    def _draw(self, rng, n):
        # numpy's pareto() is the Lomax form on [0, inf); shift and rescale.
        return (1.0 + rng.pareto(self.shape, n)) * self.scale

    def survival(self, x):
        return 1.0 if x <= self.scale else (self.scale / x) ** self.shape

    def quantile(self, q):
        return self.scale * (1.0 - q) ** (-1.0 / self.shape)

    def support(self):
        return (self.scale, math.inf)


_KINDS = {cls.kind: cls for cls in (Uniform, Gaussian, Exponential, Gumbel, Pareto)}


def noise_from_dict(d: dict) -> NoiseSpec:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _KINDS:
        raise ConfigError(f"noise.kind: unknown kind {kind!r}, expected one of {sorted(_KINDS)}")
    try:
        return _KINDS[kind](**d)
    except TypeError as e:
        raise ConfigError(f"noise: bad parameters for {kind!r}: {e}") from e


class MaxStat(NamedTuple):
    n: int
    mean_max: float
    var_max: float


class RatioEstimate(NamedTuple):
    ratio: float
    stderr: float


class TailClass(str, enum.Enum):
    MAX_CONCENTRATING = "MaxConcentrating"
    LONG_TAILED = "LongTailed"
    INTERMEDIATE = "Intermediate"


@dataclass(frozen=True)
class TailReport:
    beta_hat: float
    beta_stderr: float
    hazard_ratios: tuple[tuple[float, float], ...]
    classification: TailClass
    max_mean_curve: tuple[MaxStat, ...]
    note: str = CLASSIFIER_NOTE


def max_order_stats(
    spec: NoiseSpec,
    n_grid: Sequence[int],
    replications: int,
    rng: np.random.Generator,
) -> list[MaxStat]:
    """Monte Carlo mean and variance of the maximum of n draws, per n."""
    if replications < 2:
        raise ConfigError(f"replications must be >= 2 for a variance, got {replications}")
    out = []
    for n in n_grid:
        if n < 1:
            raise ConfigError(f"n_grid entries must be >= 1, got {n}")
        maxima = np.empty(replications)
        done = 0
        chunk = max(1, _MAX_CHUNK_DRAWS // n)
        while done < replications:
            k = min(chunk, replications - done)
            draws = spec.sample(rng, k * n).reshape(k, n)
            maxima[done : done + k] = draws.max(axis=1)
            done += k
        out.append(MaxStat(int(n), float(maxima.mean()), float(maxima.var(ddof=1))))
    return out


def estimate_beta(
    spec: NoiseSpec,
    n_grid: Sequence[int],
    replications: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Negated least-squares slope of log var_max against log n, with stderr."""
    stats = max_order_stats(spec, n_grid, replications, rng)
    return beta_from_stats(stats)


def beta_from_stats(stats: Sequence[MaxStat]) -> tuple[float, float]:
    ns = np.array([s.n for s in stats], dtype=float)
    if len(set(ns)) < 3:
        raise ConfigError(f"n_grid must contain >= 3 distinct values, got {sorted(set(ns))}")
    if ns.max() / ns.min() < 100:
        raise ConfigError("n_grid must span at least two decades")
    vs = np.array([s.var_max for s in stats], dtype=float)
    if np.any(vs <= 0):
        raise DegenerateVarianceError("var_max is zero for some n (point-mass distribution?)")
    x = np.log(ns)
    y = np.log(vs)
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    resid = (y - y.mean()) - slope * xc
    dof = len(x) - 2
    stderr = float(np.sqrt((resid @ resid) / dof / (xc @ xc))) if dof > 0 else math.nan
    return -slope, stderr


def long_tail_ratio(
    spec: NoiseSpec,
    x: float,
    d: float,
    *,
    method: str = "auto",
    rng: np.random.Generator | None = None,
    samples: int = 200_000,
) -> RatioEstimate:
    """Conditional survival ratio Pr[X > x + d | X > x].

    Closed form (stderr 0) when the spec admits one and method is "auto";
    otherwise a Monte Carlo estimate with its binomial standard error.
    """
    if d <= 0:
        raise ConfigError(f"d must be positive, got {d}")
    if method not in ("auto", "closed", "empirical"):
        raise ConfigError(f"method: unknown method {method!r}")
    if method in ("auto", "closed"):
        try:
            denom = spec.survival(x)
        except NotImplementedError:
            if method == "closed":
                raise
        else:
            if denom <= 0.0:
                raise InsufficientTailMassError(f"Pr[X > {x}] = 0 for {spec!r}")
            return RatioEstimate(spec.survival(x + d) / denom, 0.0)
    if rng is None:
        raise ConfigError("empirical long_tail_ratio requires an rng")
    draws = spec.sample(rng, samples)
    tail = draws > x
    n_tail = int(tail.sum())
    if n_tail == 0:
        raise InsufficientTailMassError(f"no draws above x={x} in {samples} samples")
    r = float((draws[tail] > x + d).mean())
    return RatioEstimate(r, math.sqrt(max(r * (1.0 - r), 1e-12) / n_tail))


def classify_tail(
    beta_hat: float,
    hazard_ratios: Sequence[tuple[float, float]],
    *,
    beta_min: float = DEFAULT_BETA_MIN,
    ratio_min: float = DEFAULT_RATIO_MIN,
    tol: float = 1e-9,
) -> TailClass:
    """Classify from the beta estimate and the survival-ratio sequence.

    Max-concentrating needs a clearly positive beta and decaying ratios;
    long-tailed needs ratios that rise with x and exceed ratio_min at the
    deepest probe.  Everything else is labelled intermediate.
    """
    ratios = [r for _, r in hazard_ratios]
    decaying = all(b <= a + tol for a, b in zip(ratios, ratios[1:]))
    rising = all(b >= a - tol for a, b in zip(ratios, ratios[1:]))
    if beta_hat > beta_min and decaying:
        return TailClass.MAX_CONCENTRATING
    if ratios and ratios[-1] > ratio_min and rising:
        return TailClass.LONG_TAILED
    return TailClass.INTERMEDIATE


def tail_report(
    spec: NoiseSpec,
    rng: np.random.Generator,
    *,
    n_grid: Sequence[int] = (10, 100, 1000, 10_000),
    replications: int = 2000,
    probe_quantiles: Sequence[float] = DEFAULT_PROBE_QUANTILES,
    probe_gap: float = DEFAULT_PROBE_GAP,
    probe_samples: int = 100_000,
    beta_min: float = DEFAULT_BETA_MIN,
    ratio_min: float = DEFAULT_RATIO_MIN,
) -> TailReport:
    """Run both diagnostics and classify the distribution."""
    stats = max_order_stats(spec, n_grid, replications, rng)
    beta_hat, beta_stderr = beta_from_stats(stats)
    probes = empirical_quantiles(spec, probe_quantiles, probe_samples, rng)
    ratios = tuple(
        (float(x), float(long_tail_ratio(spec, x, probe_gap).ratio)) for x in probes
    )
    cls = classify_tail(beta_hat, ratios, beta_min=beta_min, ratio_min=ratio_min)
    return TailReport(beta_hat, beta_stderr, ratios, cls, tuple(stats))


def empirical_quantiles(
    spec: NoiseSpec,
    quantiles: Sequence[float],
    samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    draws = spec.sample(rng, samples)
    return np.quantile(draws, np.asarray(quantiles))
