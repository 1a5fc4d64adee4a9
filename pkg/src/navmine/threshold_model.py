"""Per-page dwell thresholds separating destinations from stop-overs.

For a page with visits (t_i, T_i) -- dwell and time already spent on the
site -- the threshold is

    d * sum(t_i * T_i) / sum(T_i)

i.e. the damped dwell average weighted towards visitors who had been on the
site longer. When every T_i is zero the weights vanish and the plain mean of
t_i is used instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, TextIO

DAMPING_MIN = 0.15
DAMPING_MAX = 0.85
DEFAULT_DAMPING = 0.5


class EmptySamples(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class DwellSample:
    dwell: float
    prior_site_time: float
    estimated: bool = False


@dataclass(frozen=True)
class PageThreshold:
    page: str
    threshold: float
    sample_count: int
    damping: float


def check_damping(d: float) -> float:
    if not DAMPING_MIN <= d <= DAMPING_MAX:
        raise ValueError(f"damping {d} outside [{DAMPING_MIN}, {DAMPING_MAX}]")
    return d


def collect_samples(sessions: Iterable) -> dict[str, list[DwellSample]]:
    samples: dict[str, list[DwellSample]] = {}
    for s in sessions:
        for v in s.visits:
            samples.setdefault(v.page, []).append(
                DwellSample(v.dwell, v.prior_site_time, v.dwell_estimated)
            )
    return samples


def compute_threshold(samples: Iterable[DwellSample], d: float = DEFAULT_DAMPING) -> float:
    check_damping(d)
    acc = ThresholdAccumulator()
    for s in samples:
        acc.add(s.dwell, s.prior_site_time)
    if acc.count == 0:
        raise EmptySamples("no dwell samples")
    return acc.threshold(d)


class ThresholdAccumulator:
    """Running sums for one page, so thresholds need not keep every sample."""

    __slots__ = ("weighted", "weight", "total", "count")

    def __init__(self):
        self.weighted = 0.0
        self.weight = 0.0
        self.total = 0.0
        self.count = 0

    def add(self, dwell: float, prior: float) -> None:
        if dwell < 0 or prior < 0:
            raise ValueError("dwell and prior site time must be non-negative")
        self.weighted += dwell * prior
        self.weight += prior
        self.total += dwell
        self.count += 1

    def threshold(self, d: float) -> float:
        if self.count == 0:
            return math.inf
        if self.weight > 0:
            return d * self.weighted / self.weight
        return d * self.total / self.count


def accumulate(sessions: Iterable, include_estimated: bool = True) -> dict[str, ThresholdAccumulator]:
    accs: dict[str, ThresholdAccumulator] = {}
    for s in sessions:
        for v in s.visits:
            if v.dwell_estimated and not include_estimated:
                continue
            acc = accs.get(v.page)
            if acc is None:
                acc = accs[v.page] = ThresholdAccumulator()
            acc.add(v.dwell, v.prior_site_time)
    return accs


def compute_thresholds(
    sessions: Iterable,
    damping: float = DEFAULT_DAMPING,
    overrides: Optional[Mapping[str, float]] = None,
    include_estimated: bool = True,
) -> dict[str, PageThreshold]:
    """Threshold for every page seen in ``sessions``.

    Pages missing from the result should be treated as having an infinite
    threshold; :func:`threshold_lookup` does that.
    """
    check_damping(damping)
    overrides = overrides or {}
    for d in overrides.values():
        check_damping(d)
    result = {}
    for page, acc in accumulate(sessions, include_estimated).items():
        d = overrides.get(page, damping)
        result[page] = PageThreshold(page, acc.threshold(d), acc.count, d)
    return result


def threshold_lookup(thresholds: Mapping[str, PageThreshold]) -> dict[str, float]:
    return {page: t.threshold for page, t in thresholds.items()}


def load_damping_file(source: TextIO | Iterable[str]) -> dict[str, float]:
    """Read ``page<TAB>d`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'page<TAB>d', got {raw.rstrip()!r}")
        try:
            d = float(parts[1])
        except ValueError:
            raise ValueError(f"line {lineno}: bad damping value {parts[1]!r}") from None
        out[parts[0]] = check_damping(d)
    return out
