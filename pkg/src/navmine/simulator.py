"""Synthetic browsing sessions with known destinations and detours.

A simulated user starts at the site root and looks for each of an ordered
list of destination pages in turn. At every page they follow the out-link
closest to the current target, except that with probability
``wrong_choice_prob`` they pick some other link instead. When no link gets
them closer they go back to the page they came from (with probability
``backtrack_prob``) or wander forward at random. After ``give_up_steps``
moves without success they give up and start on the next target.

Pages backtracked from while searching are the planted IRLs; reaching a
target plants a destination visit with a long dwell.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional, Sequence

from .log_ingest import format_clf
from .sessionizer import PageVisit, Session
from .site_graph import SiteGraph


@dataclass(frozen=True)
class DwellDistribution:
    """Uniform on [mean - jitter, mean + jitter], rounded to whole seconds, at least 1 s."""

    mean: float
    jitter: float = 0.0

    def draw(self, rng: random.Random) -> int:
        value = self.mean + self.jitter * (2.0 * rng.random() - 1.0)
        return max(1, round(value))


@dataclass(frozen=True)
class UserPolicy:
    wrong_choice_prob: float = 0.3
    backtrack_prob: float = 0.9
    give_up_steps: int = 25
    dwell_at_transit: DwellDistribution = DwellDistribution(10.0, 5.0)
    dwell_at_destination: DwellDistribution = DwellDistribution(120.0, 40.0)
    seed: int = 0

    def __post_init__(self):
        for name in ("wrong_choice_prob", "backtrack_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.give_up_steps < 1:
            raise ValueError("give_up_steps must be positive")
        if self.dwell_at_destination.mean <= self.dwell_at_transit.mean:
            raise ValueError("destination dwell mean must exceed transit dwell mean")


@dataclass
class GroundTruth:
    session_id: str
    client: str
    destinations: list
    reached: list
    planted_irls: list = field(default_factory=list)
    # index into the visit sequence where each destination was found (None if given up)
    destination_positions: list = field(default_factory=list)

    def to_line(self) -> str:
        return "\t".join([
            self.session_id,
            self.client,
            ",".join(self.destinations),
            ",".join("1" if r else "0" for r in self.reached),
            ",".join(self.planted_irls),
        ])

    @classmethod
    def from_line(cls, line: str) -> "GroundTruth":
        sid, client, dests, reached, irls = line.rstrip("\n").split("\t")
        split = lambda s: s.split(",") if s else []
        return cls(sid, client, split(dests), [x == "1" for x in split(reached)], split(irls))


def simulate_session(
    g: SiteGraph,
    destinations: Sequence[str],
    policy: UserPolicy,
    rng: Optional[random.Random] = None,
    start: float = 0.0,
    client: str = "sim",
    session_id: str = "sim#0",
) -> tuple[Session, GroundTruth]:
    """Walk ``g`` from its root looking for each destination in order.

    Visit dwells are the drawn (true) dwells, including the last visit's,
    which a log cannot reveal.
    """
    if g.root is None:
        raise ValueError("site graph has no root")
    for d in destinations:
        if d not in g.nodes:
            raise ValueError(f"destination {d!r} is not a page of the site")
    if rng is None:
        rng = random.Random(policy.seed)

    path = [g.root]          # pages we could go back through
    seq = [g.root]
    found_at = [False]       # visit i is a found destination
    planted: list[str] = []
    reached: list[bool] = []
    positions: list[Optional[int]] = []

    def forward(page: str) -> None:
        path.append(page)
        seq.append(page)
        found_at.append(False)

    for target in destinations:
        dist = g.distances_to(target)
        steps = 0
        while path[-1] != target and steps < policy.give_up_steps:
            steps += 1
            here = path[-1]
            links = [p for p in g.successors(here) if p != here]
            d_here = dist.get(here)
            closer = [p for p in links if d_here is not None and dist.get(p) == d_here - 1]
            if closer:
                best = closer[0]
                others = [p for p in links if p != best]
                if others and rng.random() < policy.wrong_choice_prob:
                    forward(rng.choice(others))
                else:
                    forward(best)
                continue
            can_back = len(path) > 1
            if can_back and (not links or rng.random() < policy.backtrack_prob):
                if not found_at[-1]:
                    planted.append(here)
                path.pop()
                seq.append(path[-1])
                found_at.append(False)
            elif links:
                forward(rng.choice(links))
            else:
                break
        if path[-1] == target:
            reached.append(True)
            found_at[-1] = True
            positions.append(len(seq) - 1)
        else:
            reached.append(False)
            positions.append(None)

    visits = []
    clock = start
    for i, page in enumerate(seq):
        dist_kind = policy.dwell_at_destination if found_at[i] else policy.dwell_at_transit
        dwell = float(dist_kind.draw(rng))
        visits.append(PageVisit(page, clock, dwell, clock - start, False))
        clock += dwell
    session = Session(client, tuple(visits), session_id, tuple(v.arrival for v in visits))
    truth = GroundTruth(session_id, client, list(destinations), reached, planted, positions)
    return session, truth


def random_tree(n_nodes: int, seed: int = 0, max_children: int = 4) -> SiteGraph:
    """Random recursive tree rooted at ``/`` with pages ``/pNN.html``."""
    if n_nodes < 1:
        raise ValueError("need at least one node")
    rng = random.Random(seed)
    width = len(str(n_nodes - 1))
    names = ["/"] + [f"/p{i:0{width}d}.html" for i in range(1, n_nodes)]
    children = [0] * n_nodes
    edges = []
    for i in range(1, n_nodes):
        parent = rng.choice([p for p in range(i) if children[p] < max_children])
        children[parent] += 1
        edges.append((names[parent], names[i]))
    return SiteGraph.from_edges(edges, root="/", nodes=names)


def client_address(index: int) -> str:
    return f"10.{(index >> 16) & 255}.{(index >> 8) & 255}.{index & 255}"


def simulate_corpus(
    g: SiteGraph,
    n_sessions: int,
    policy: UserPolicy,
    clock_start: datetime = datetime(2005, 7, 1, tzinfo=timezone.utc),
    max_destinations: int = 2,
    destination_pool: Optional[Sequence[str]] = None,
    spacing: float = 7.0,
) -> list[tuple[Session, GroundTruth]]:
    """Independent sessions, one synthetic client each.

    Session i uses its own generator seeded from (policy.seed, i), so any
    subset of sessions can be regenerated on its own.
    """
    if n_sessions < 0:
        raise ValueError("n_sessions must be non-negative")
    if n_sessions > 1 << 24:
        raise ValueError("client address space holds at most 2**24 sessions")
    if destination_pool is None:
        destination_pool = sorted(p for p in _reachable(g, g.root) if p != g.root)
    pool = list(destination_pool)
    base = clock_start.timestamp()
    out = []
    for i in range(n_sessions):
        rng = random.Random(f"{policy.seed}:{i}")
        k = rng.randint(1, max_destinations) if pool else 0
        dests = [rng.choice(pool) for _ in range(k)] if pool else [g.root]
        out.append(simulate_session(
            g, dests, policy, rng,
            start=base + i * spacing,
            client=client_address(i),
            session_id=f"s{i:06d}",
        ))
    return out


def _reachable(g: SiteGraph, start: str) -> set[str]:
    seen = {start}
    stack = [start]
    while stack:
        for nxt in g.successors(stack.pop()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def render_log(simulated: Sequence[tuple[Session, GroundTruth]]) -> str:
    """Common Log Format lines for all sessions, in global time order."""
    entries = []
    for idx, (session, _) in enumerate(simulated):
        for pos, v in enumerate(session.visits):
            entries.append((v.arrival, idx, pos, session.client_key, v.page))
    entries.sort()
    zone = timezone.utc
    lines = [
        format_clf(client, datetime.fromtimestamp(t, zone), page, 200, 512)
        for t, _, _, client, page in entries
    ]
    return "".join(line + "\n" for line in lines)


def render_truth(simulated: Sequence[tuple[Session, GroundTruth]]) -> str:
    return "".join(truth.to_line() + "\n" for _, truth in simulated)


def generate_corpus(
    g: SiteGraph,
    n_sessions: int,
    policy: UserPolicy,
    clock_start: datetime = datetime(2005, 7, 1, tzinfo=timezone.utc),
    **kwargs,
) -> tuple[str, str]:
    """(log text, ground-truth text) for ``n_sessions`` simulated users."""
    simulated = simulate_corpus(g, n_sessions, policy, clock_start, **kwargs)
    return render_log(simulated), render_truth(simulated)
