"""Student-proposing deferred acceptance and stability verification.

Colleges rank students by score; exact score ties are broken in favour of
the lower student index, and the same tie-broken order is used both inside
the algorithm and in the blocking-pair scan so the two never disagree.
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .market import SampledMarket

UNMATCHED = -1


@dataclass(frozen=True)
class Matching:
    """Assignment plus per-college rosters sorted best-first."""

    assignment: np.ndarray  # (n_students,) college index or UNMATCHED
    rosters: tuple[np.ndarray, ...]  # per college: student indices, best score first
    scores: tuple[np.ndarray, ...]  # matching roster order
    capacities: tuple[int, ...]

    @property
    def n_students(self) -> int:
        return len(self.assignment)

    @property
    def n_colleges(self) -> int:
        return len(self.rosters)

    def matched_count(self) -> int:
        return int((self.assignment != UNMATCHED).sum())


def deferred_acceptance(market: SampledMarket, capacities: Sequence[int]) -> Matching:
    """Student-optimal stable matching for the sampled market.

    Each college keeps a min-heap of tentatively admitted students keyed by
    (score, -student), so the worst admit pops first and a displaced student
    resumes proposing from their next choice.
    """
    n, n_colleges = market.scores.shape
    caps = [int(c) for c in capacities]
    if len(caps) != n_colleges:
        raise ValueError(f"capacities: expected {n_colleges} entries, got {len(caps)}")

    prefs = market.prefs.tolist()
    scores = market.scores.tolist()
    heaps: list[list[tuple[float, int]]] = [[] for _ in range(n_colleges)]
    next_choice = [0] * n
    assignment = [UNMATCHED] * n

    stack = list(range(n - 1, -1, -1))
    while stack:
        s = stack.pop()
        row_prefs = prefs[s]
        row_scores = scores[s]
        while next_choice[s] < n_colleges:
            c = row_prefs[next_choice[s]]
            next_choice[s] += 1
            entry = (row_scores[c], -s)
            heap = heaps[c]
            if len(heap) < caps[c]:
                heapq.heappush(heap, entry)
                assignment[s] = c
                break
            if entry > heap[0]:
                _, neg_displaced = heapq.heapreplace(heap, entry)
                displaced = -neg_displaced
                assignment[displaced] = UNMATCHED
                assignment[s] = c
                stack.append(displaced)
                break

    rosters = []
    roster_scores = []
    for heap in heaps:
        order = sorted(heap, key=lambda e: (-e[0], e[1]))
        rosters.append(np.array([-neg for _, neg in order], dtype=int))
        roster_scores.append(np.array([sc for sc, _ in order]))
    return Matching(
        np.array(assignment, dtype=int), tuple(rosters), tuple(roster_scores), tuple(caps)
    )


def find_blocking_pairs(
    matching: Matching, market: SampledMarket, capacities: Sequence[int] | None = None
) -> list[tuple[int, int]]:
    """Every (student, college) pair that would jointly deviate.

    A pair blocks when the student strictly prefers the college to their
    assignment and the college either has a free seat or admits someone it
    ranks below the student.  Empty output certifies stability.
    """
    caps = list(capacities) if capacities is not None else list(matching.capacities)
    n, n_colleges = market.scores.shape
    assignment = matching.assignment

    rank = np.empty((n, n_colleges), dtype=int)
    rows = np.arange(n)[:, None]
    rank[rows, market.prefs] = np.arange(n_colleges)[None, :]
    assigned_rank = np.where(
        assignment != UNMATCHED, rank[np.arange(n), np.clip(assignment, 0, None)], n_colleges
    )

    pairs: list[tuple[int, int]] = []
    for c in range(n_colleges):
        roster = matching.rosters[c]
        prefers = rank[:, c] < assigned_rank
        if len(roster) < caps[c]:
            hits = np.nonzero(prefers)[0]
        else:
            worst_score = matching.scores[c][-1]
            ties = roster[matching.scores[c] == worst_score]
            worst_key = (worst_score, -int(ties.max()))
            col = market.scores[:, c]
            better = (col > worst_key[0]) | ((col == worst_key[0]) & (-np.arange(n) > worst_key[1]))
            hits = np.nonzero(prefers & better)[0]
        pairs.extend((int(s), c) for s in hits)
    pairs.sort()
    return pairs


def matching_to_csv(matching: Matching, market: SampledMarket, path: str | Path) -> None:
    """One row per student: assigned college (empty when unmatched) and score."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["student", "college", "score"])
        for s, c in enumerate(matching.assignment):
            if c == UNMATCHED:
                w.writerow([s, "", ""])
            else:
                w.writerow([s, int(c), repr(float(market.scores[s, c]))])
