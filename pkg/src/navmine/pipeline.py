"""End-to-end mining: log lines -> sessions -> marks/records -> recommendations."""
from __future__ import annotations

import csv
import io
import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .log_ingest import FilterConfig, ParseStats, iter_hits
from .optimizer import OmegaWeights, RecommendationSet, recommend
from .pattern_miner import MiningResult, mine_sessions, records_to_csv_rows
from .sessionizer import DEFAULT_TIMEOUT, SESSION_MEAN, Hit, LastDwellPolicy, Session, sessionize
from .site_graph import SiteGraph, infer_edges_from_sessions, load_edge_list
from .threshold_model import (
    DEFAULT_DAMPING,
    PageThreshold,
    check_damping,
    compute_thresholds,
    load_damping_file,
    threshold_lookup,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


class ConfigError(ValueError):
    pass


class UnknownPage(KeyError):
    pass


@dataclass
class PipelineConfig:
    logs: list = field(default_factory=list)
    log_format: str = "common"
    graph: Optional[Path] = None
    timeout: float = DEFAULT_TIMEOUT
    damping: float = DEFAULT_DAMPING
    damping_file: Optional[Path] = None
    omega: OmegaWeights = field(default_factory=OmegaWeights)
    last_dwell: LastDwellPolicy = SESSION_MEAN
    filter: FilterConfig = field(default_factory=FilterConfig)
    include_estimated: bool = True
    min_support: int = 1
    out_dir: Path = Path("navmine-out")
    emit: str = "csv"
    workers: int = 1

    def validate(self) -> None:
        for p in self.logs:
            if not Path(p).is_file():
                raise ConfigError(f"log file not found: {p}")
        for p in (self.graph, self.damping_file):
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"file not found: {p}")
        try:
            check_damping(self.damping)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.log_format not in ("common", "combined"):
            raise ConfigError(f"unknown log format {self.log_format!r}")
        if self.emit not in ("csv", "text"):
            raise ConfigError(f"unknown output format {self.emit!r}")
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")


@dataclass
class MineOutput:
    sessions: list
    graph: SiteGraph
    thresholds: dict
    mining: MiningResult
    recommendations: dict
    stats: ParseStats


def _chunks(seq: Sequence, n: int) -> list:
    size = max(1, -(-len(seq) // n))
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def read_hits(
    lines: Iterable[str],
    log_format: str = "common",
    cfg: FilterConfig = FilterConfig(),
    stats: Optional[ParseStats] = None,
    source: str = "<input>",
    workers: int = 1,
) -> list[Hit]:
    """Parse a whole stream. With several workers the lines are split into
    contiguous chunks and the chunk results re-joined in source order."""
    if stats is None:
        stats = ParseStats()
    if workers == 1:
        return list(iter_hits(lines, log_format, cfg, stats, source))
    lines = list(lines)
    parts = _chunks(lines, workers)

    def work(part):
        st = ParseStats()
        return list(iter_hits(part, log_format, cfg, st, source)), st

    with ThreadPoolExecutor(workers) as pool:
        results = list(pool.map(work, parts))
    hits = []
    offset = 0
    for (part_hits, st), part in zip(results, parts):
        hits.extend(part_hits)
        stats.lines += st.lines
        stats.malformed += st.malformed
        stats.rejected += st.rejected
        stats.kept += st.kept
        for src, lineno, reason in st.samples:
            if len(stats.samples) < stats.max_samples:
                stats.samples.append((src, lineno + offset, reason))
        offset += len(part)
    return hits


def mine(
    hits: Iterable[Hit],
    graph: Optional[SiteGraph] = None,
    timeout: float = DEFAULT_TIMEOUT,
    damping: float = DEFAULT_DAMPING,
    overrides: Optional[dict] = None,
    omega: OmegaWeights = OmegaWeights(),
    last_dwell: LastDwellPolicy = SESSION_MEAN,
    include_estimated: bool = True,
    min_support: int = 1,
    workers: int = 1,
    keep_marks: bool = False,
    stats: Optional[ParseStats] = None,
) -> MineOutput:
    sessions = sessionize(hits, timeout, last_dwell)
    if graph is None:
        # no sitemap: every observed transition becomes a link, so only
        # backtracks (prev == next) and session ends can be candidates
        graph = infer_edges_from_sessions(sessions, min_support)
    thresholds = compute_thresholds(sessions, damping, overrides, include_estimated)
    limits = threshold_lookup(thresholds)
    if workers == 1:
        result = mine_sessions(sessions, graph, limits, keep_marks)
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(
                lambda part: mine_sessions(part, graph, limits, keep_marks),
                _chunks(sessions, workers),
            ))
        result = MiningResult([], 0, {} if keep_marks else None)
        for part in parts:
            result.records.extend(part.records)
            result.abandoned += part.abandoned
            if keep_marks:
                result.marks.update(part.marks)
    recs = recommend(result.records, omega)
    return MineOutput(sessions, graph, thresholds, result, recs, stats or ParseStats())


def load_config_inputs(cfg: PipelineConfig) -> tuple[list[Hit], Optional[SiteGraph], dict, ParseStats]:
    stats = ParseStats()
    hits: list[Hit] = []
    for path in cfg.logs:
        with open(path, encoding="utf-8", errors="replace") as fh:
            hits.extend(read_hits(fh, cfg.log_format, cfg.filter, stats, str(path), cfg.workers))
    graph = None
    if cfg.graph is not None:
        with open(cfg.graph, encoding="utf-8") as fh:
            try:
                graph = load_edge_list(fh)
            except ValueError as exc:
                raise ConfigError(f"{cfg.graph}: {exc}") from None
    overrides = {}
    if cfg.damping_file is not None:
        with open(cfg.damping_file, encoding="utf-8") as fh:
            try:
                overrides = load_damping_file(fh)
            except ValueError as exc:
                raise ConfigError(f"{cfg.damping_file}: {exc}") from None
    return hits, graph, overrides, stats


def run_pipeline(cfg: PipelineConfig) -> MineOutput:
    cfg.validate()
    hits, graph, overrides, stats = load_config_inputs(cfg)
    return mine(
        hits, graph, cfg.timeout, cfg.damping, overrides, cfg.omega, cfg.last_dwell,
        cfg.include_estimated, cfg.min_support, cfg.workers, stats=stats,
    )


# -- report rendering -------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def records_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    width = max((len(r.irls) for r in records), default=0)
    w.writerow(["destination", "actual_location"] + [f"irl_{i}" for i in range(1, width + 1)])
    w.writerows(records_to_csv_rows(records))
    return buf.getvalue()


def recommendations_csv(recs: dict[str, RecommendationSet]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["destination", "s_p", "page", "beta", "recommended", "is_top", "actual_locations"])
    for dest, rs in recs.items():
        als = ";".join(sorted(rs.actual_locations))
        for page in sorted(rs.beta, key=lambda p: (-rs.beta[p], p)):
            w.writerow([
                dest, _fmt(rs.s_p), page, _fmt(rs.beta[page]),
                int(page in rs.recommended), int(page == rs.top_candidate), als,
            ])
    return buf.getvalue()


def recommendations_text(recs: dict[str, RecommendationSet]) -> str:
    out = []
    for dest, rs in recs.items():
        out.append(f"destination: {dest}")
        out.append(f"  s_p: {rs.s_p:.6g}")
        out.append(f"  actual_locations: {', '.join(sorted(rs.actual_locations)) or '-'}")
        if rs.top_candidate is not None:
            out.append(f"  top_candidate: {rs.top_candidate}")
        for page in sorted(rs.beta, key=lambda p: (-rs.beta[p], p)):
            flag = "recommended" if page in rs.recommended else "-"
            top = " top" if page == rs.top_candidate else ""
            out.append(f"  {page}\tbeta={rs.beta[page]:.6g}\t{flag}{top}")
        for page in sorted(rs.recommended):
            out.append(f"  add link {page} -> {dest}")
        out.append("")
    return "\n".join(out)


def thresholds_csv(thresholds: dict[str, PageThreshold]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["page", "threshold", "samples", "damping"])
    for page in sorted(thresholds):
        t = thresholds[page]
        w.writerow([page, _fmt(t.threshold), t.sample_count, _fmt(t.damping)])
    return buf.getvalue()


def run_summary(out: MineOutput) -> dict:
    return {
        "lines": out.stats.lines,
        "malformed_lines": out.stats.malformed,
        "malformed_samples": [
            {"source": s, "line": n, "reason": r} for s, n, r in out.stats.samples
        ],
        "rejected_hits": out.stats.rejected,
        "page_hits": out.stats.kept,
        "sessions": len(out.sessions),
        "records": len(out.mining.records),
        "abandoned_searches": out.mining.abandoned,
        "destinations": len(out.recommendations),
        "graph": {"nodes": len(out.graph.nodes), "edges": len(out.graph.edges), "root": out.graph.root},
        "thresholds": {
            page: {"threshold": t.threshold if t.threshold != float("inf") else None,
                   "samples": t.sample_count, "damping": t.damping}
            for page, t in sorted(out.thresholds.items())
        },
    }


def write_reports(out: MineOutput, out_dir: Path, emit: str = "csv") -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name: str, text: str) -> None:
        path = out_dir / name
        path.write_text(text, encoding="utf-8")
        written.append(path)

    put("records.csv", records_csv(out.mining.records))
    if emit == "csv":
        put("recommendations.csv", recommendations_csv(out.recommendations))
    else:
        put("recommendations.txt", recommendations_text(out.recommendations))
    put("summary.json", json.dumps(run_summary(out), indent=2, sort_keys=True) + "\n")
    return written


def emit_path_hit_counts(
    sessions: Iterable[Session],
    page: str,
    known_pages: Optional[Iterable[str]] = None,
    entry_label: str = "(entry)",
) -> list[tuple[str, str, int]]:
    """Visits to ``page`` counted by (previous page, calendar month UTC).

    Rows come back sorted by predecessor, then month.
    """
    if known_pages is not None and page not in set(known_pages):
        raise UnknownPage(page)
    counts = Counter()
    for s in sessions:
        prev = entry_label
        for v in s.visits:
            if v.page == page:
                month = datetime.fromtimestamp(v.arrival, timezone.utc).strftime("%Y-%m")
                counts[(prev, month)] += 1
            prev = v.page
    return [(p, m, n) for (p, m), n in sorted(counts.items())]


def path_hit_counts_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["predecessor", "month", "hits"])
    w.writerows(rows)
    return buf.getvalue()
