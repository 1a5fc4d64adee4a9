"""navmine command line.

    navmine mine access.log --graph site.txt --out results/
    navmine thresholds access.log --damping 0.4
    navmine report access.log --page /internet.html
    navmine simulate --random-tree 30 --sessions 1000 --out corpus/

Tunables may also come from ``--config file.json`` (keys are the long option
names with dashes turned into underscores); flags given on the command line
win over the file.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

from .log_ingest import FilterConfig, MalformedLine
from .optimizer import OmegaWeights
from .pipeline import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    ConfigError,
    PipelineConfig,
    UnknownPage,
    emit_path_hit_counts,
    path_hit_counts_csv,
    run_pipeline,
    thresholds_csv,
    write_reports,
)
from .sessionizer import parse_last_dwell
from .simulator import DwellDistribution, UserPolicy, generate_corpus, random_tree
from .site_graph import BadEdgeLine, dump_edge_list, load_edge_list

log = logging.getLogger("navmine")

# option dest -> built-in default, applied after the config file
DEFAULTS = {
    "format": "common",
    "timeout": 30.0,
    "damping": 0.5,
    "damping_file": None,
    "omega": "1,0.75,0.5,0.25",
    "omega_overflow": "repeat",
    "graph": None,
    "last_dwell": "mean",
    "out": "navmine-out",
    "emit": "csv",
    "workers": 1,
    "key_user_agent": False,
    "exclude_estimated": False,
    "min_support": 1,
}


def _pipeline_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("logs", nargs="*", type=Path, help="access log files")
    p.add_argument("--config", type=Path, help="JSON file with option defaults")
    p.add_argument("--format", choices=["common", "combined"])
    p.add_argument("--timeout", type=float, help="session inactivity timeout, minutes (default 30)")
    p.add_argument("--damping", type=float, help="global damping factor d in [0.15, 0.85]")
    p.add_argument("--damping-file", type=Path, help="per-page damping overrides, 'page<TAB>d' lines")
    p.add_argument("--omega", help="IRL position weights, e.g. 1,0.75,0.5,0.25")
    p.add_argument("--omega-overflow", choices=["repeat", "zero"])
    p.add_argument("--graph", type=Path, help="site edge list; inferred from the logs when absent")
    p.add_argument("--last-dwell", help="'mean' or 'const:<seconds>'")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--emit", choices=["csv", "text"])
    p.add_argument("--workers", type=int, help="parallel workers; output does not depend on it")
    p.add_argument("--key-user-agent", action="store_true", default=None,
                   help="identify clients by address and user agent")
    p.add_argument("--exclude-estimated", action="store_true", default=None,
                   help="leave estimated last-visit dwells out of thresholds")
    p.add_argument("--min-support", type=int, help="session support for inferred links")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="navmine", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    mine = sub.add_parser("mine", help="mine logs and write records and recommendations")
    _pipeline_options(mine)

    thr = sub.add_parser("thresholds", help="write per-page dwell thresholds")
    _pipeline_options(thr)

    rep = sub.add_parser("report", help="hits to a page by predecessor and month")
    _pipeline_options(rep)
    rep.add_argument("--page", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic log with ground truth")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", type=Path, help="site edge list with a '# root' line")
    src.add_argument("--random-tree", type=int, metavar="N", help="random N-page tree")
    sim.add_argument("--tree-seed", type=int, default=0)
    sim.add_argument("--sessions", type=int, default=1000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--epsilon", type=float, default=0.3, help="wrong-link probability")
    sim.add_argument("--backtrack", type=float, default=0.9, help="backtrack probability when stuck")
    sim.add_argument("--give-up", type=int, default=25, help="moves before abandoning a target")
    sim.add_argument("--transit-dwell", default="10,5", help="mean,jitter seconds")
    sim.add_argument("--destination-dwell", default="120,40", help="mean,jitter seconds")
    sim.add_argument("--max-destinations", type=int, default=2)
    sim.add_argument("--start", default="2005-07-01T00:00:00+00:00", help="ISO clock start")
    sim.add_argument("--out", type=Path, default=Path("navmine-sim"))
    return parser


def _merged(args: argparse.Namespace) -> dict:
    conf = {}
    if args.config is not None:
        try:
            conf = json.loads(args.config.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}:{exc.lineno}: {exc.msg}") from None
        unknown = set(conf) - set(DEFAULTS) - {"logs"}
        if unknown:
            raise ConfigError(f"{args.config}: unknown keys {sorted(unknown)}")
    values = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        values[key] = flag if flag is not None else conf.get(key, default)
    values["logs"] = list(args.logs) or [Path(p) for p in conf.get("logs", [])]
    return values


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    v = _merged(args)
    try:
        omega = OmegaWeights.parse(str(v["omega"]), v["omega_overflow"])
        last_dwell = parse_last_dwell(str(v["last_dwell"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    opt_path = lambda p: None if p is None else Path(p)
    return PipelineConfig(
        logs=[Path(p) for p in v["logs"]],
        log_format=v["format"],
        graph=opt_path(v["graph"]),
        timeout=float(v["timeout"]) * 60.0,
        damping=float(v["damping"]),
        damping_file=opt_path(v["damping_file"]),
        omega=omega,
        last_dwell=last_dwell,
        filter=FilterConfig(key_user_agent=bool(v["key_user_agent"])),
        include_estimated=not v["exclude_estimated"],
        min_support=int(v["min_support"]),
        out_dir=Path(v["out"]),
        emit=v["emit"],
        workers=int(v["workers"]),
    )


def _pair(text: str) -> DwellDistribution:
    mean, _, jitter = text.partition(",")
    return DwellDistribution(float(mean), float(jitter or 0.0))


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.graph is not None:
        with open(args.graph, encoding="utf-8") as fh:
            g = load_edge_list(fh)
        if g.root is None:
            raise ConfigError(f"{args.graph}: no '# root <page>' line")
    else:
        g = random_tree(args.random_tree, seed=args.tree_seed)
    try:
        policy = UserPolicy(
            args.epsilon, args.backtrack, args.give_up,
            _pair(args.transit_dwell), _pair(args.destination_dwell), args.seed,
        )
        start = datetime.fromisoformat(args.start)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if start.tzinfo is None:
        start = start.replace(tzinfo=timezone.utc)
    log_text, truth = generate_corpus(g, args.sessions, policy, start,
                                      max_destinations=args.max_destinations)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "access.log").write_text(log_text, encoding="utf-8")
    (args.out / "truth.tsv").write_text(truth, encoding="utf-8")
    (args.out / "graph.txt").write_text(dump_edge_list(g), encoding="utf-8")
    print(f"wrote {args.sessions} sessions to {args.out}")
    return EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    out = run_pipeline(cfg)
    if args.command == "mine":
        for path in write_reports(out, cfg.out_dir, cfg.emit):
            log.info("wrote %s", path)
        print(
            f"{out.stats.lines} lines ({out.stats.malformed} malformed), "
            f"{len(out.sessions)} sessions, {len(out.mining.records)} records, "
            f"{len(out.recommendations)} destinations -> {cfg.out_dir}"
        )
    elif args.command == "thresholds":
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        (cfg.out_dir / "thresholds.csv").write_text(thresholds_csv(out.thresholds), encoding="utf-8")
        print(f"{len(out.thresholds)} page thresholds -> {cfg.out_dir / 'thresholds.csv'}")
    else:
        known = {v.page for s in out.sessions for v in s.visits} | set(out.graph.nodes)
        try:
            rows = emit_path_hit_counts(out.sessions, args.page, known)
        except UnknownPage:
            raise ConfigError(f"page {args.page!r} appears in neither the logs nor the graph") from None
        sys.stdout.write(path_hit_counts_csv(rows))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        return cmd_pipeline(args)
    except (ConfigError, BadEdgeLine, MalformedLine) as exc:
        print(f"navmine: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # damping-file and omega parse problems surface as ValueError
        print(f"navmine: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"navmine: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
