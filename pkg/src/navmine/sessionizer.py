"""Split per-client hit streams into sessions and annotate visit times.

Each visit carries two durations in seconds:

* ``dwell`` -- time until the next visit in the session (estimated for the last one)
* ``prior_site_time`` -- time since the session's first visit
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, replace
from operator import itemgetter
from typing import Iterable, NamedTuple, Sequence, Union

DEFAULT_TIMEOUT = 30 * 60.0
SINGLE_VISIT_DWELL = 30.0
SESSION_MEAN = "session_mean"

# "session_mean" or a constant number of seconds
LastDwellPolicy = Union[str, float]


class Hit(NamedTuple):
    client_key: str
    timestamp: float  # POSIX seconds
    page: str


class PageVisit(NamedTuple):
    page: str
    arrival: float
    dwell: float = 0.0
    prior_site_time: float = 0.0
    dwell_estimated: bool = False


@dataclass(frozen=True, slots=True)
class Session:
    client_key: str
    visits: tuple[PageVisit, ...]
    session_id: str = ""
    # every raw hit timestamp folded into this session, reloads included
    hit_times: tuple[float, ...] = ()

    @property
    def pages(self) -> list[str]:
        return [v.page for v in self.visits]

    @property
    def start(self) -> float:
        return self.visits[0].arrival


def parse_last_dwell(text: str) -> LastDwellPolicy:
    """Read ``mean`` / ``session_mean`` or ``const:<seconds>``."""
    text = text.strip()
    if text in ("mean", SESSION_MEAN):
        return SESSION_MEAN
    if text.startswith("const:"):
        value = float(text[6:])
        if value < 0:
            raise ValueError("constant last dwell must be non-negative")
        return value
    raise ValueError(f"unknown last-dwell policy {text!r}")


def annotate_times(session: Session, last_dwell_policy: LastDwellPolicy = SESSION_MEAN) -> Session:
    """Return a copy of ``session`` with dwell and prior-site times filled in."""
    visits = _annotate([v.page for v in session.visits], [v.arrival for v in session.visits],
                       last_dwell_policy)
    return replace(session, visits=visits)


def _annotate(pages: Sequence[str], arrivals: Sequence[float], policy: LastDwellPolicy) -> tuple:
    n = len(arrivals)
    start = arrivals[0]
    if policy == SESSION_MEAN:
        last = (arrivals[-1] - start) / (n - 1) if n > 1 else SINGLE_VISIT_DWELL
    else:
        last = float(policy)
    out = [
        PageVisit(pages[i], arrivals[i], arrivals[i + 1] - arrivals[i], arrivals[i] - start, False)
        for i in range(n - 1)
    ]
    out.append(PageVisit(pages[-1], arrivals[-1], last, arrivals[-1] - start, True))
    return tuple(out)


def _build(client: str, index: int, hits: list[Hit], policy: LastDwellPolicy) -> Session:
    pages = []
    arrivals = []
    last_page = None
    for _, ts, page in hits:
        if page != last_page:
            pages.append(page)
            arrivals.append(ts)
            last_page = page
    visits = _annotate(pages, arrivals, policy)
    return Session(client, visits, f"{client}#{index}", tuple(h.timestamp for h in hits))


_timestamp = itemgetter(1)


def sessionize(
    hits: Iterable[Hit],
    timeout: float = DEFAULT_TIMEOUT,
    last_dwell_policy: LastDwellPolicy = SESSION_MEAN,
) -> list[Session]:
    """Group hits into sessions.

    A client's next hit opens a new session when it arrives more than ``timeout``
    seconds after that client's previous hit. Consecutive hits on the same page
    collapse into one visit that keeps the first arrival. Sessions come back
    ordered by (client, start time), so output is independent of input order
    for hits with distinct timestamps.
    """
    by_client: dict[str, list[Hit]] = defaultdict(list)
    for h in hits:
        by_client[h.client_key].append(h)

    sessions = []
    for client in sorted(by_client):
        stream = by_client[client]
        stream.sort(key=_timestamp)  # stable: ties keep source order
        index = 0
        current = [stream[0]]
        for prev, h in zip(stream, stream[1:]):
            if h.timestamp - prev.timestamp > timeout:
                sessions.append(_build(client, index, current, last_dwell_policy))
                index += 1
                current = [h]
            else:
                current.append(h)
        sessions.append(_build(client, index, current, last_dwell_policy))
    return sessions
