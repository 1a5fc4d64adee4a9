"""Find destination pages in web access logs and the pages where users
expected to find them."""

from .log_ingest import FilterConfig, MalformedLine, RawHit, filter_hits, parse_line
from .optimizer import (
    BetaTable,
    OmegaWeights,
    RecommendationSet,
    compute_beta,
    recommend,
    summarize,
    truncate,
)
from .pattern_miner import Mark, PatternRecord, extract_records, mark_session
from .sessionizer import Hit, PageVisit, Session, annotate_times, sessionize
from .site_graph import SiteGraph, infer_edges_from_sessions, load_edge_list
from .threshold_model import DwellSample, collect_samples, compute_threshold, compute_thresholds

__version__ = "0.1.0"
