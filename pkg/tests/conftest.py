import pytest

from navmine.sessionizer import PageVisit, Session
from navmine.site_graph import SiteGraph

SAMPLE_EDGES = [
    ("P", "P1"), ("P", "P2"),
    ("P1", "P3"), ("P1", "P4"),
    ("P2", "P5"), ("P2", "P6"),
    ("P6", "P9"),
]
SAMPLE_TRAIL = ["P", "P1", "P3", "P1", "P4", "P2", "P5", "P2", "P6", "P9"]

# the four rows of the worked optimization table (destination D1, AL A1)
TABLE_ROWS = [
    ["P3", "P5", "P4", "P1"],
    ["P2", "P1"],
    ["P1"],
    ["P3", "P4", "P2"],
]


def make_session(pages, dwells, client="c", session_id="c#0"):
    """Annotated session with explicit dwells; arrivals follow from them."""
    visits = []
    clock = 0.0
    for i, (page, dwell) in enumerate(zip(pages, dwells)):
        visits.append(PageVisit(page, clock, float(dwell), clock, i == len(pages) - 1))
        clock += dwell
    return Session(client, tuple(visits), session_id, tuple(v.arrival for v in visits))


@pytest.fixture
def sample_graph():
    return SiteGraph.from_edges(SAMPLE_EDGES, root="P")


@pytest.fixture
def table_records():
    from navmine.pattern_miner import PatternRecord

    return [PatternRecord("D1", "A1", tuple(row), f"r{i}") for i, row in enumerate(TABLE_ROWS, 1)]
