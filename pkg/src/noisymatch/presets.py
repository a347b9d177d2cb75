"""Bundled experiment presets behind the CLI's --preset flag.

fig1 is a single-pool benchmark: one coalition, half the students' worth of
seats split equally across C colleges, uniform random preferences.  fig2 is
a two-tier benchmark: a preferred coalition holding a quarter of the
students' worth of seats above a second coalition holding half, with
independent uniform values per coalition.
"""

from __future__ import annotations

from .errors import ConfigError
from .estimation import AffordProbability, ExperimentPlan, MatchProbability, equal_width_edges
from .market import (
    Coalition,
    College,
    EconomyConfig,
    TieredByCoalition,
    UniformRandomPreferences,
    UniformValues,
)
from .noise import Exponential, Gaussian, Gumbel, NoiseSpec, Pareto, Uniform

PRESET_NAMES = ("fig1", "fig2")

DEFAULT_SEED = 7
DEFAULT_REPLICATIONS = 100
DEFAULT_STUDENTS = 2000
DEFAULT_BINS = 50

# Exponential rate defaults to 1; the benchmark definition leaves it open.
_NOISE_TOKENS = {
    "uniform": lambda: Uniform(0.0, 1.0),
    "exponential": lambda: Exponential(1.0),
    "pareto": lambda: Pareto(2.0, 0.3),
    "gaussian": lambda: Gaussian(0.0, 1.0),
    "gumbel": lambda: Gumbel(0.0, 1.0),
    "none": lambda: None,
}


def noise_from_token(token: str) -> NoiseSpec | None:
    key = token.strip().lower()
    if key not in _NOISE_TOKENS:
        raise ConfigError(
            f"noise: unknown token {token!r}, expected one of {sorted(_NOISE_TOKENS)}"
        )
    return _NOISE_TOKENS[key]()


def split_seats(total: int, count: int) -> list[int]:
    """Split seats as equally as possible while summing exactly to total."""
    base, rem = divmod(total, count)
    return [base + 1 if i < rem else base for i in range(count)]


def fig1(
    *,
    colleges: int = 100,
    noise: str = "uniform",
    seed: int = DEFAULT_SEED,
    replications: int = DEFAULT_REPLICATIONS,
    n_students: int = DEFAULT_STUDENTS,
    total_seats: int | None = None,
    bins: int = DEFAULT_BINS,
) -> tuple[EconomyConfig, ExperimentPlan]:
    if colleges < 1:
        raise ConfigError(f"colleges: must be >= 1, got {colleges}")
    seats = total_seats if total_seats is not None else n_students // 2
    spec = noise_from_token(noise)
    config = EconomyConfig(
        n_students=n_students,
        colleges=tuple(
            College(id=i + 1, capacity=cap, coalition=1)
            for i, cap in enumerate(split_seats(seats, colleges))
        ),
        coalitions=(Coalition(id=1, values=UniformValues(0.0, 1.0), noise=spec),),
        preferences=UniformRandomPreferences(),
        master_seed=seed,
    )
    plan = ExperimentPlan(
        replications=replications,
        bin_edges=equal_width_edges((0.0, 1.0), bins),
        curves=(MatchProbability(coalition_id=1), AffordProbability(coalition_id=1)),
        record_cutoffs=True,
    )
    return config, plan


def fig2(
    *,
    colleges: int = 20,
    noise: str = "uniform",
    seed: int = DEFAULT_SEED,
    replications: int = DEFAULT_REPLICATIONS,
    n_students: int = DEFAULT_STUDENTS,
    bins: int = DEFAULT_BINS,
) -> tuple[EconomyConfig, ExperimentPlan]:
    """Two coalitions of `colleges` colleges each; coalition 1 preferred."""
    if colleges < 1:
        raise ConfigError(f"colleges: must be >= 1, got {colleges}")
    spec = noise_from_token(noise)
    seats_1 = split_seats(n_students // 4, colleges)
    seats_2 = split_seats(n_students // 2, colleges)
    cols = [
        College(id=i + 1, capacity=cap, coalition=1) for i, cap in enumerate(seats_1)
    ] + [
        College(id=colleges + i + 1, capacity=cap, coalition=2)
        for i, cap in enumerate(seats_2)
    ]
    config = EconomyConfig(
        n_students=n_students,
        colleges=tuple(cols),
        coalitions=(
            Coalition(id=1, values=UniformValues(0.0, 1.0), noise=spec),
            Coalition(id=2, values=UniformValues(0.0, 1.0), noise=spec),
        ),
        preferences=TieredByCoalition(),
        master_seed=seed,
    )
    plan = ExperimentPlan(
        replications=replications,
        bin_edges=equal_width_edges((0.0, 1.0), bins),
        curves=(
            MatchProbability(coalition_id=1),
            MatchProbability(coalition_id=2),
            AffordProbability(coalition_id=1, trim_epsilon=0.05),
            AffordProbability(coalition_id=2, trim_epsilon=0.05),
        ),
        record_cutoffs=True,
    )
    return config, plan


def preset(name: str, **overrides) -> tuple[EconomyConfig, ExperimentPlan]:
    if name == "fig1":
        return fig1(**overrides)
    if name == "fig2":
        return fig2(**overrides)
    raise ConfigError(f"preset: unknown preset {name!r}, expected one of {PRESET_NAMES}")
