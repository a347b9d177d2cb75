"""Finite sampled economies: student values, preferences, and noisy scores.

An economy is described by a list of colleges grouped into coalitions.
Colleges in one coalition share each student's true value and observe it
through independent noise; students rank all colleges by a configurable
preference model.  Sampling is deterministic given the config's master
seed and a replication index, with separate derived streams for values,
preferences, and noise.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, OverdemandError
from .noise import NoiseSpec

STREAM_VALUES = 0
STREAM_PREFS = 1
STREAM_NOISE = 2


class CapacityRegularityWarning(UserWarning):
    """A single college holds a disproportionate share of total capacity."""


def child_rng(master_seed: int, replication: int, stream: int) -> np.random.Generator:
    """Independent generator for one (replication, stream) pair.

    SeedSequence spawning keys guarantee non-overlapping streams, so
    replications can run concurrently without a shared RNG.
    """
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(replication, stream))
    )


# ---------------------------------------------------------------------------
# value distributions


class ValueDistribution:
    kind: str = ""

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, q):
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class UniformValues(ValueDistribution):
    lo: float = 0.0
    hi: float = 1.0
    kind = "uniform"

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ConfigError(f"values: hi must exceed lo, got lo={self.lo}, hi={self.hi}")

    def sample(self, rng, n):
        return rng.uniform(self.lo, self.hi, n)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def quantile(self, q):
        return self.lo + np.asarray(q, dtype=float) * (self.hi - self.lo)

    def support(self):
        return (self.lo, self.hi)

    def to_dict(self):
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class PiecewiseLinearCdf(ValueDistribution):
    """CDF given as sorted (value, cumulative probability) knots.

    Knots must rise strictly in both coordinates from (v0, 0) to (vk, 1),
    which keeps the support a single interval with no atoms.
    """

    knots: tuple[tuple[float, float], ...]
    kind = "piecewise"

    def __post_init__(self):
        ks = tuple((float(v), float(p)) for v, p in self.knots)
        object.__setattr__(self, "knots", ks)
        if len(ks) < 2:
            raise ConfigError("values.knots: need at least two knots")
        vs = [v for v, _ in ks]
        ps = [p for _, p in ks]
        if ps[0] != 0.0 or ps[-1] != 1.0:
            raise ConfigError("values.knots: cumulative probabilities must start at 0 and end at 1")
        if any(b <= a for a, b in zip(vs, vs[1:])):
            raise ConfigError("values.knots: values must be strictly increasing")
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise ConfigError("values.knots: cumulative probabilities must be strictly increasing")

    def _arrays(self):
        vs = np.array([v for v, _ in self.knots])
        ps = np.array([p for _, p in self.knots])
        return vs, ps

    def sample(self, rng, n):
        return self.quantile(rng.random(n))

    def cdf(self, x):
        vs, ps = self._arrays()
        return np.interp(np.asarray(x, dtype=float), vs, ps, left=0.0, right=1.0)

    def quantile(self, q):
        vs, ps = self._arrays()
        return np.interp(np.asarray(q, dtype=float), ps, vs)

    def support(self):
        return (self.knots[0][0], self.knots[-1][0])

    def to_dict(self):
        return {"kind": self.kind, "knots": [list(k) for k in self.knots]}


_VALUE_KINDS = {"uniform": UniformValues, "piecewise": PiecewiseLinearCdf}


def values_from_dict(d: dict) -> ValueDistribution:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _VALUE_KINDS:
        raise ConfigError(f"values.kind: unknown kind {kind!r}")
    if kind == "piecewise":
        d["knots"] = tuple(tuple(k) for k in d.get("knots", ()))
    try:
        return _VALUE_KINDS[kind](**d)
    except TypeError as e:
        raise ConfigError(f"values: bad parameters for {kind!r}: {e}") from e


def v_s_threshold(dist: ValueDistribution, total_capacity_fraction: float) -> float:
    """Value v_S with a mass of exactly S students above it."""
    s = total_capacity_fraction
    if not 0.0 < s < 1.0:
        raise ValueError(f"total capacity fraction must lie in (0, 1), got {s}")
    return float(dist.quantile(1.0 - s))


@dataclass(frozen=True)
class HolderReport:
    passed: bool
    gamma: float
    fitted_k: float
    worst_ratio: float
    worst_v: float
    worst_delta: float


def holder_exponent_check(
    dist: ValueDistribution,
    gamma: float,
    delta_grid: Sequence[float],
    *,
    v_grid_size: int = 201,
) -> HolderReport:
    """Check interval masses against K * delta**gamma over a (v, delta) grid.

    K is fitted at the coarsest delta, so the check asks whether smaller
    intervals keep at most the same normalised mass; a density spike or a
    too-large gamma shows up as a worst ratio above 1.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    deltas = sorted(float(d) for d in delta_grid)
    if not deltas or deltas[0] <= 0:
        raise ValueError("delta_grid must contain positive values")
    lo, hi = dist.support()
    vs = np.asarray(dist.quantile(np.linspace(0.0, 1.0, v_grid_size)), dtype=float)
    vs = np.unique(np.clip(vs, lo, hi))
    d_max = deltas[-1]
    k = float(np.max(dist.cdf(vs + d_max) - dist.cdf(vs)) / d_max**gamma)
    worst = (0.0, vs[0], d_max)
    for d in deltas:
        ratios = (dist.cdf(vs + d) - dist.cdf(vs)) / (k * d**gamma)
        i = int(np.argmax(ratios))
        if ratios[i] > worst[0]:
            worst = (float(ratios[i]), float(vs[i]), d)
    return HolderReport(worst[0] <= 1.0 + 1e-9, gamma, k, *worst)


# ---------------------------------------------------------------------------
# preference models


class PreferenceModel:
    kind: str = ""

    def sample_prefs(
        self, rng: np.random.Generator, n: int, n_colleges: int, tiers: np.ndarray
    ) -> np.ndarray:
        """(n, C) array of college indices, most preferred first."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class UniformRandomPreferences(PreferenceModel):
    kind = "uniform_random"

    def sample_prefs(self, rng, n, n_colleges, tiers):
        return np.argsort(rng.random((n, n_colleges)), axis=1)


@dataclass(frozen=True)
class CommonRanking(PreferenceModel):
    ranking: tuple[int, ...]
    kind = "common_ranking"

    def sample_prefs(self, rng, n, n_colleges, tiers):
        order = np.asarray(self.ranking, dtype=int)
        if sorted(order.tolist()) != list(range(n_colleges)):
            raise ConfigError(
                f"preferences.ranking: must be a permutation of 0..{n_colleges - 1}"
            )
        return np.tile(order, (n, 1))

    def to_dict(self):
        return {"kind": self.kind, "ranking": list(self.ranking)}


@dataclass(frozen=True)
class TieredByCoalition(PreferenceModel):
    """Lower-indexed coalitions strictly first, uniform random within each."""

    kind = "tiered_by_coalition"

    def sample_prefs(self, rng, n, n_colleges, tiers):
        # tiers are small integers; a U(0,1) jitter randomises within a tier
        # without ever crossing tier boundaries.
        key = tiers[None, :] + rng.random((n, n_colleges))
        return np.argsort(key, axis=1)


@dataclass(frozen=True)
class ExplicitSampler(PreferenceModel):
    rankings: tuple[tuple[int, ...], ...]
    probabilities: tuple[float, ...]
    kind = "explicit"

    def __post_init__(self):
        if len(self.rankings) != len(self.probabilities):
            raise ConfigError("preferences: rankings and probabilities differ in length")
        if not self.rankings:
            raise ConfigError("preferences.rankings: must be non-empty")
        if any(p < 0 for p in self.probabilities):
            raise ConfigError("preferences.probabilities: must be non-negative")
        if abs(sum(self.probabilities) - 1.0) > 1e-9:
            raise ConfigError("preferences.probabilities: must sum to 1")

    def sample_prefs(self, rng, n, n_colleges, tiers):
        want = list(range(n_colleges))
        for r in self.rankings:
            if sorted(r) != want:
                raise ConfigError(
                    f"preferences.rankings: {r} is not a permutation of 0..{n_colleges - 1}"
                )
        table = np.asarray(self.rankings, dtype=int)
        picks = rng.choice(len(table), size=n, p=np.asarray(self.probabilities))
        return table[picks]

    def to_dict(self):
        return {
            "kind": self.kind,
            "rankings": [list(r) for r in self.rankings],
            "probabilities": list(self.probabilities),
        }


def preferences_from_dict(d: dict) -> PreferenceModel:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind == "uniform_random":
        return UniformRandomPreferences()
    if kind == "common_ranking":
        return CommonRanking(ranking=tuple(d.get("ranking", ())))
    if kind == "tiered_by_coalition":
        return TieredByCoalition()
    if kind == "explicit":
        return ExplicitSampler(
            rankings=tuple(tuple(r) for r in d.get("rankings", ())),
            probabilities=tuple(d.get("probabilities", ())),
        )
    raise ConfigError(f"preferences.kind: unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# economy configuration


@dataclass(frozen=True)
class College:
    id: int
    capacity: int
    coalition: int


@dataclass(frozen=True)
class Coalition:
    id: int
    values: ValueDistribution
    noise: NoiseSpec | None


@dataclass(frozen=True)
class EconomyConfig:
    n_students: int
    colleges: tuple[College, ...]
    coalitions: tuple[Coalition, ...]
    preferences: PreferenceModel
    master_seed: int
    capacity_alpha: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "colleges", tuple(self.colleges))
        object.__setattr__(self, "coalitions", tuple(self.coalitions))
        if self.n_students < 1:
            raise ConfigError(f"n_students: must be >= 1, got {self.n_students}")
        if not self.colleges:
            raise ConfigError("colleges: must be non-empty")
        if not self.coalitions:
            raise ConfigError("coalitions: must be non-empty")
        ids = [c.id for c in self.colleges]
        if len(set(ids)) != len(ids):
            raise ConfigError("colleges: ids must be unique")
        kids = [k.id for k in self.coalitions]
        if len(set(kids)) != len(kids):
            raise ConfigError("coalitions: ids must be unique")
        known = set(kids)
        for c in self.colleges:
            if int(c.capacity) != c.capacity or c.capacity < 1:
                raise ConfigError(f"colleges[{c.id}].capacity: must be a positive integer")
            if c.coalition not in known:
                raise ConfigError(f"colleges[{c.id}].coalition: unknown coalition {c.coalition!r}")
        members = {k: 0 for k in known}
        for c in self.colleges:
            members[c.coalition] += 1
        empty = [k for k, m in members.items() if m == 0]
        if empty:
            raise ConfigError(f"coalitions: no colleges reference coalition(s) {empty}")
        total = sum(c.capacity for c in self.colleges)
        if total >= self.n_students:
            raise OverdemandError(
                f"total capacity {total} must be strictly below n_students {self.n_students}"
            )
        cap_bound = self.capacity_alpha * self.n_students / len(self.colleges)
        worst = max(self.colleges, key=lambda c: c.capacity)
        if worst.capacity > cap_bound:
            warnings.warn(
                f"college {worst.id} capacity {worst.capacity} exceeds "
                f"alpha*n/C = {cap_bound:.1f}",
                CapacityRegularityWarning,
                stacklevel=2,
            )

    @property
    def n_colleges(self) -> int:
        return len(self.colleges)

    def capacities(self) -> np.ndarray:
        return np.array([c.capacity for c in self.colleges], dtype=int)

    def total_capacity(self) -> int:
        return int(sum(c.capacity for c in self.colleges))

    def coalition_index(self) -> np.ndarray:
        """Coalition position (by config order) of each college."""
        pos = {k.id: i for i, k in enumerate(self.coalitions)}
        return np.array([pos[c.coalition] for c in self.colleges], dtype=int)

    def coalition_members(self, coalition_id) -> np.ndarray:
        """College indices belonging to one coalition."""
        out = [i for i, c in enumerate(self.colleges) if c.coalition == coalition_id]
        if not out:
            raise ConfigError(f"coalition {coalition_id!r} has no colleges")
        return np.array(out, dtype=int)


@dataclass(frozen=True)
class SampledMarket:
    """One realisation of an economy.

    scores[s, c] is the student's coalition value at college c plus an
    independent noise draw; prefs rows are college indices, best first.
    """

    values: np.ndarray  # (n_students, n_coalitions)
    prefs: np.ndarray  # (n_students, n_colleges) int
    scores: np.ndarray  # (n_students, n_colleges)
    college_coalition: np.ndarray  # (n_colleges,) coalition position per college
    replication: int = 0

    @property
    def n_students(self) -> int:
        return self.values.shape[0]

    @property
    def n_colleges(self) -> int:
        return self.scores.shape[1]


def sample_market(config: EconomyConfig, replication: int = 0) -> SampledMarket:
    """Draw students, preferences, and noisy scores for one replication."""
    n = config.n_students
    n_colleges = config.n_colleges
    coal_idx = config.coalition_index()

    rng_values = child_rng(config.master_seed, replication, STREAM_VALUES)
    values = np.empty((n, len(config.coalitions)))
    for k, coalition in enumerate(config.coalitions):
        values[:, k] = coalition.values.sample(rng_values, n)

    rng_prefs = child_rng(config.master_seed, replication, STREAM_PREFS)
    prefs = config.preferences.sample_prefs(rng_prefs, n, n_colleges, coal_idx)

    rng_noise = child_rng(config.master_seed, replication, STREAM_NOISE)
    scores = values[:, coal_idx].copy()
    for c in range(n_colleges):
        spec = config.coalitions[coal_idx[c]].noise
        if spec is not None:
            scores[:, c] += spec.sample(rng_noise, n)

    return SampledMarket(values, prefs, scores, coal_idx, replication)


def market_to_csv(market: SampledMarket, path: str | Path) -> None:
    """Debug dump: one row per student with values, ranking, and scores."""
    n_k = market.values.shape[1]
    n_c = market.n_colleges
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["student"]
            + [f"value_{k}" for k in range(n_k)]
            + ["ranking"]
            + [f"score_{c}" for c in range(n_c)]
        )
        for s in range(market.n_students):
            w.writerow(
                [s]
                + [repr(float(v)) for v in market.values[s]]
                + [" ".join(map(str, market.prefs[s]))]
                + [repr(float(x)) for x in market.scores[s]]
            )
