"""Score IRL pages per destination and decide where new links should go.

Each pattern record lists the pages a user tried, in order, before reaching
a destination. The n-th tried page earns weight omega[n]; a page's score
(beta) is the sum of its weights over all records for that destination.
Pages scoring at least the mean score are recommended as places for a direct
link to the destination, and the recommended pages plus everything tried
after them are then dropped from the records.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .pattern_miner import PatternRecord

DEFAULT_OMEGA = (1.0, 0.75, 0.5, 0.25)
OVERFLOW_POLICIES = ("repeat_last", "zero")

# Slack for the >= mean comparison: a correctly rounded mean can land one ulp
# above the largest score when all scores are equal.
_TIE_EPS = 1e-12


@dataclass(frozen=True)
class OmegaWeights:
    weights: tuple = DEFAULT_OMEGA
    overflow_policy: str = "repeat_last"

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if not w:
            raise ValueError("omega weights must not be empty")
        if any(not 0.0 <= x <= 1.0 for x in w):
            raise ValueError("omega weights must lie in [0, 1]")
        if any(a < b for a, b in zip(w, w[1:])):
            raise ValueError("omega weights must be non-increasing")
        if self.overflow_policy not in OVERFLOW_POLICIES:
            raise ValueError(f"overflow policy must be one of {OVERFLOW_POLICIES}")

    @classmethod
    def parse(cls, text: str, overflow: str = "repeat_last") -> "OmegaWeights":
        if overflow == "repeat":
            overflow = "repeat_last"
        return cls(tuple(float(x) for x in text.split(",") if x.strip()), overflow)

    def weight(self, position: int) -> float:
        """Weight of the 1-based IRL position."""
        if position < 1:
            raise ValueError("positions are 1-based")
        if position <= len(self.weights):
            return self.weights[position - 1]
        return self.weights[-1] if self.overflow_policy == "repeat_last" else 0.0


@dataclass
class BetaTable:
    destination: str | None
    beta: dict = field(default_factory=dict)


@dataclass
class RecommendationSet:
    destination: str | None
    s_p: float
    recommended: frozenset
    top_candidate: str | None
    beta: dict = field(default_factory=dict)
    actual_locations: frozenset = frozenset()


def compute_beta(records: Iterable[PatternRecord], omega: OmegaWeights = OmegaWeights()) -> BetaTable:
    records = list(records)
    dests = {r.destination for r in records}
    if len(dests) > 1:
        raise ValueError(f"records span several destinations: {sorted(dests)}")
    parts: dict[str, list[float]] = defaultdict(list)
    for r in records:
        for pos, page in enumerate(r.irls, start=1):
            parts[page].append(omega.weight(pos))
    # fsum keeps the result independent of record order
    beta = {page: math.fsum(ws) for page, ws in parts.items()}
    return BetaTable(next(iter(dests), None), beta)


def summarize(b: BetaTable, actual_locations: Iterable[str] = ()) -> RecommendationSet:
    beta = b.beta
    if not beta:
        return RecommendationSet(b.destination, 0.0, frozenset(), None, {}, frozenset(actual_locations))
    s_p = math.fsum(beta.values()) / len(beta)
    cutoff = s_p - _TIE_EPS * max(1.0, abs(s_p))
    recommended = frozenset(p for p, v in beta.items() if v >= cutoff)
    top = min(beta, key=lambda p: (-beta[p], p))
    return RecommendationSet(b.destination, s_p, recommended, top, dict(beta), frozenset(actual_locations))


def truncate(records: Iterable[PatternRecord], recommended) -> list[PatternRecord]:
    """Cut each record's IRL list at its first recommended page."""
    out = []
    for r in records:
        for k, page in enumerate(r.irls):
            if page in recommended:
                r = PatternRecord(r.destination, r.actual_location, r.irls[:k], r.session_ref)
                break
        out.append(r)
    return out


def group_by_destination(records: Iterable[PatternRecord]) -> dict[str, list[PatternRecord]]:
    groups: dict[str, list[PatternRecord]] = defaultdict(list)
    for r in records:
        groups[r.destination].append(r)
    return dict(groups)


def recommend(records: Iterable[PatternRecord], omega: OmegaWeights = OmegaWeights()) -> dict[str, RecommendationSet]:
    """One recommendation set per destination, keyed and ordered by destination."""
    groups = group_by_destination(records)
    result = {}
    for dest in sorted(groups):
        recs = groups[dest]
        result[dest] = summarize(compute_beta(recs, omega), {r.actual_location for r in recs})
    return result
