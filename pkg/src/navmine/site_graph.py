"""Directed link structure of a site.

Edge-list files hold one ``from-page to-page`` pair per line (tab or space
separated). Lines starting with ``#`` are comments; ``# root <page>`` names
the entry page.
"""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, TextIO

UNREACHABLE = None


class BadEdgeLine(ValueError):
    def __init__(self, lineno: int, line: str):
        super().__init__(f"line {lineno}: expected 'from-page to-page', got {line!r}")
        self.lineno = lineno
        self.line = line


@dataclass(frozen=True)
class SiteGraph:
    nodes: frozenset = frozenset()
    edges: frozenset = frozenset()
    root: Optional[str] = None
    _out: dict = field(default=None, init=False, repr=False, compare=False)
    _in: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        out, inc = {}, {}
        for a, b in sorted(self.edges):
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge ({a!r}, {b!r}) has an endpoint outside the node set")
            out.setdefault(a, []).append(b)
            inc.setdefault(b, []).append(a)
        object.__setattr__(self, "_out", {k: tuple(v) for k, v in out.items()})
        object.__setattr__(self, "_in", {k: tuple(v) for k, v in inc.items()})
        if self.root is not None and self.root not in self.nodes:
            raise ValueError(f"root {self.root!r} is not a node")

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]], root: Optional[str] = None,
                   nodes: Iterable[str] = ()) -> "SiteGraph":
        edges = frozenset(edges)
        all_nodes = set(nodes)
        for a, b in edges:
            all_nodes.add(a)
            all_nodes.add(b)
        if root is not None:
            all_nodes.add(root)
        return cls(frozenset(all_nodes), edges, root)

    def successors(self, page: str) -> tuple[str, ...]:
        """Out-links of ``page`` in sorted order."""
        return self._out.get(page, ())

    def predecessors(self, page: str) -> tuple[str, ...]:
        return self._in.get(page, ())

    def is_connected(self, a: str, b: str) -> bool:
        return (a, b) in self.edges

    def distance(self, a: str, b: str) -> Optional[int]:
        """Shortest directed hop count from ``a`` to ``b``, or ``UNREACHABLE``."""
        if a == b:
            return 0
        seen = {a}
        queue = deque([(a, 0)])
        while queue:
            page, d = queue.popleft()
            for nxt in self.successors(page):
                if nxt == b:
                    return d + 1
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append((nxt, d + 1))
        return UNREACHABLE

    def distances_to(self, target: str) -> dict[str, int]:
        """Hop count from every page that can reach ``target`` (reverse BFS)."""
        dist = {target: 0}
        queue = deque([target])
        while queue:
            page = queue.popleft()
            for prev in self.predecessors(page):
                if prev not in dist:
                    dist[prev] = dist[page] + 1
                    queue.append(prev)
        return dist


def is_connected(g: SiteGraph, a: str, b: str) -> bool:
    return g.is_connected(a, b)


def distance(g: SiteGraph, a: str, b: str) -> Optional[int]:
    return g.distance(a, b)


def load_edge_list(source: TextIO | Iterable[str]) -> SiteGraph:
    edges = set()
    root = None
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "root":
                root = parts[1]
            continue
        parts = line.split()
        if len(parts) != 2:
            raise BadEdgeLine(lineno, raw.rstrip("\n"))
        edges.add((parts[0], parts[1]))
    return SiteGraph.from_edges(edges, root=root)


def dump_edge_list(g: SiteGraph) -> str:
    lines = [f"# root {g.root}"] if g.root is not None else []
    lines += [f"{a}\t{b}" for a, b in sorted(g.edges)]
    return "\n".join(lines) + ("\n" if lines else "")


def infer_edges_from_sessions(sessions: Iterable, min_support: int = 1) -> SiteGraph:
    """Edges seen as consecutive visits in at least ``min_support`` sessions."""
    if min_support < 1:
        raise ValueError("min_support must be at least 1")
    support = Counter()
    for s in sessions:
        pages = [v.page for v in s.visits]
        support.update({(a, b) for a, b in zip(pages, pages[1:]) if a != b})
    return SiteGraph.from_edges(e for e, n in support.items() if n >= min_support)
