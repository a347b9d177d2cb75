"""Admission cutoffs, the demand map, and cutoff-based diagnostics.

A cutoff vector is a plain float array with one entry per college: the
minimum admitted score for a full college and -inf for an underfilled one.
A student can afford a college when their score is at least its cutoff;
with that half-open rule the demand of every student under the extracted
cutoffs reproduces the deferred-acceptance assignment exactly.
"""

from __future__ import annotations

import numpy as np

from .market import SampledMarket
from .matching import UNMATCHED, Matching

CutoffVector = np.ndarray


def extract_cutoffs(matching: Matching) -> CutoffVector:
    """Per-college minimum admitted score; -inf where seats stay empty."""
    out = np.empty(len(matching.rosters))
    for c, scores in enumerate(matching.scores):
        if len(scores) < matching.capacities[c]:
            out[c] = -np.inf
        else:
            out[c] = scores[-1]
    return out


def afford_matrix(market: SampledMarket, cutoffs: CutoffVector) -> np.ndarray:
    """(n_students, n_colleges) boolean affordability table."""
    return market.scores >= np.asarray(cutoffs)[None, :]


def demand(student: int, market: SampledMarket, cutoffs: CutoffVector) -> int | None:
    """Most preferred affordable college for one student, or None."""
    afford = market.scores[student] >= np.asarray(cutoffs)
    for c in market.prefs[student]:
        if afford[c]:
            return int(c)
    return None


def demand_all(market: SampledMarket, cutoffs: CutoffVector) -> np.ndarray:
    """Vectorised demand for every student (UNMATCHED when nothing affordable)."""
    n = market.n_students
    afford_by_rank = afford_matrix(market, cutoffs)[np.arange(n)[:, None], market.prefs]
    first = afford_by_rank.argmax(axis=1)
    chosen = market.prefs[np.arange(n), first]
    return np.where(afford_by_rank.any(axis=1), chosen, UNMATCHED)


def check_market_clearing(
    market: SampledMarket, cutoffs: CutoffVector, capacities
) -> np.ndarray:
    """Demand count minus capacity per college; all zeros means clearing."""
    caps = np.asarray(capacities, dtype=int)
    d = demand_all(market, cutoffs)
    counts = np.bincount(d[d != UNMATCHED], minlength=len(caps))
    return counts - caps


def dense_cluster(
    cutoffs: CutoffVector, delta: float, m_min: int
) -> tuple[float | None, int]:
    """Smallest cutoff value whose window [p, p+delta] holds >= m_min cutoffs.

    Underfilled (-inf) entries are excluded.  The minimiser is always
    attained at a cutoff value, so only those are scanned.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if m_min < 1:
        raise ValueError(f"m_min must be >= 1, got {m_min}")
    finite = np.sort(np.asarray(cutoffs)[np.isfinite(cutoffs)])
    hi = np.searchsorted(finite, finite + delta, side="right")
    counts = hi - np.arange(len(finite))
    qualifying = np.nonzero(counts >= m_min)[0]
    if len(qualifying) == 0:
        return None, 0
    i = qualifying[0]
    return float(finite[i]), int(counts[i])


def rate_exponent(beta: float, gamma: float) -> float:
    """Polynomial decay exponent of the mismatched mass in the college count."""
    if beta <= 0 or gamma <= 0:
        raise ValueError(f"beta and gamma must be positive, got beta={beta}, gamma={gamma}")
    return 2.0 * beta * gamma / (3.0 * beta * gamma + 2.0 * beta + 5.0 * gamma + 6.0)
