"""Classify visits as destinations (DL), intermediate reference locations
(IRL) or plain transit, and turn each session into pattern records.

A visit is a *candidate* when the user came straight back from it (the pages
before and after coincide) or when the next page is not linked from it (back
button or site navigation chrome). Candidates whose dwell reaches the page
threshold are destinations; the rest are places the user looked and left.
The last visit of a session is always a candidate.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .site_graph import SiteGraph


class Mark(enum.Enum):
    DL = "DL"
    IRL = "IRL"
    TRANSIT = "TRANSIT"

    def __str__(self):
        return self.value


@dataclass(frozen=True, slots=True)
class PatternRecord:
    destination: str
    actual_location: str
    irls: tuple[str, ...]
    session_ref: str = ""


def mark_session(session, g: SiteGraph, thresholds: Mapping[str, float]) -> list[Mark]:
    visits = session.visits
    n = len(visits)
    edges = g.edges
    marks = [Mark.TRANSIT] * n
    for i in range(n):
        page = visits[i].page
        if i == n - 1:
            candidate = True
        elif i == 0:
            candidate = False
        else:
            nxt = visits[i + 1].page
            candidate = visits[i - 1].page == nxt or (page, nxt) not in edges
        if candidate:
            limit = thresholds.get(page, math.inf)
            marks[i] = Mark.DL if visits[i].dwell >= limit else Mark.IRL
    return marks


def extract_records(session, marks: list[Mark]) -> list[PatternRecord]:
    records, _ = extract_records_with_diagnostics(session, marks)
    return records


def extract_records_with_diagnostics(session, marks: list[Mark]) -> tuple[list[PatternRecord], bool]:
    """Records plus whether the session ended with IRLs that led nowhere."""
    if len(marks) != len(session.visits):
        raise ValueError("marks are not aligned with the session's visits")
    records = []
    buffer: list[str] = []
    for j, (visit, mark) in enumerate(zip(session.visits, marks)):
        if mark is Mark.IRL:
            buffer.append(visit.page)
        elif mark is Mark.DL:
            if j > 0:
                dest = visit.page
                records.append(PatternRecord(
                    dest,
                    session.visits[j - 1].page,
                    tuple(p for p in buffer if p != dest),
                    session.session_id,
                ))
            buffer = []
    return records, bool(buffer)


@dataclass
class MiningResult:
    records: list
    abandoned: int = 0
    marks: dict = None  # session_id -> marks, only when requested


def mine_sessions(
    sessions: Iterable,
    g: SiteGraph,
    thresholds: Mapping[str, float],
    keep_marks: bool = False,
) -> MiningResult:
    result = MiningResult([], 0, {} if keep_marks else None)
    for s in sessions:
        marks = mark_session(s, g, thresholds)
        records, abandoned = extract_records_with_diagnostics(s, marks)
        result.records.extend(records)
        result.abandoned += abandoned
        if keep_marks:
            result.marks[s.session_id] = marks
    return result


def records_to_csv_rows(records: Iterable[PatternRecord]) -> list[list[str]]:
    """Ragged rows: destination, actual_location, irl_1, irl_2, ..."""
    return [[r.destination, r.actual_location, *r.irls] for r in records]


def records_from_csv_rows(rows: Iterable[list[str]]) -> list[PatternRecord]:
    out = []
    for row in rows:
        if not row or row[0] == "destination":
            continue
        out.append(PatternRecord(row[0], row[1], tuple(p for p in row[2:] if p)))
    return out
