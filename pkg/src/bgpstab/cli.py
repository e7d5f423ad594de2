"""Command-line entry point.

    bgpstab analyze --input trace.jsonl --out results/
    bgpstab generate --kind flap --prefixes 100 --peers 1 --buckets 20 --seed 7 --out flap.jsonl
    bgpstab selftest

Exit codes: 0 ok, 1 self-test failure, 2 unreadable or malformed input,
3 invalid configuration, 4 empty trace.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from . import selftest
from .analysis import (
    RankTruncation,
    assemble_timeseries,
    consistency_csv,
    fmt_real,
    stretch_csv,
    stretch_distribution,
    timeseries_csv,
)
from .ingest import (
    DEFAULT_MRAI,
    ParseError,
    ScenarioKind,
    SyntheticScenario,
    TraceConfig,
    TraceError,
    bucketize,
    format_trace_record,
    generate_synthetic,
    read_trace,
)
from .metrics import DecreasingBranch, Thresholds, classify
from .pipeline import PipelineOptions, StabilityPipeline

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_EMPTY = 4

TIMESERIES_FILE = "timeseries.csv"
STRETCH_FILE = "stretch.csv"
CONSISTENCY_FILE = "consistency.csv"
SUMMARY_FILE = "summary.txt"


class MedMode:
    USE = "use"
    ZERO = "zero"


@dataclass
class RunConfig:
    input_path: str
    output_dir: str
    mrai_seconds: int = DEFAULT_MRAI
    alpha: float = 0.01
    beta: float = 0.05
    window: int = 10
    t0_override: Optional[int] = None
    t_end: Optional[int] = None
    decreasing_branch: DecreasingBranch = DecreasingBranch.INVERTED
    med_mode: str = MedMode.USE
    rank_truncation: RankTruncation = RankTruncation.FULL

    def thresholds(self) -> Thresholds:
        return Thresholds(self.alpha, self.beta, self.window)

    def validate(self) -> None:
        self.thresholds()
        TraceConfig(self.mrai_seconds, self.t0_override, self.t_end)


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _err(msg: str) -> None:
    print(f"bgpstab: {msg}", file=sys.stderr)


def summary_text(cfg: RunConfig, n_records: int, pipeline: StabilityPipeline, rows) -> str:
    th = cfg.thresholds()
    _, windowed = classify([r.table_mu for r in rows], th)
    n = len(rows)

    def avg(values):
        return math.fsum(values) / n if n else 0.0

    lines = [
        f"records: {n_records}",
        f"buckets: {n} (mrai={cfg.mrai_seconds}s)",
        f"adj_rib_in cells: {len(pipeline.adj)}",
        f"loc_rib destinations: {len(pipeline.loc_rib)}",
        f"tracked destinations: {len(pipeline.tracks)}",
        f"thresholds: alpha={cfg.alpha} beta={cfg.beta} window={cfg.window}",
        f"decreasing branch: {cfg.decreasing_branch.value}",
        f"final windowed classification: {windowed.name}",
        f"mean table_mu: {fmt_real(avg(r.table_mu for r in rows))}",
        f"time-averaged max_rel_stable: {fmt_real(avg(r.max_rel_stable for r in rows))}",
        f"time-averaged max_rel_selected: {fmt_real(avg(r.max_rel_selected for r in rows))}",
        f"consistency pairs checked: {pipeline.consistency.checked} "
        f"(cond1 violations {pipeline.consistency.violations_cond1}, "
        f"cond2 violations {pipeline.consistency.violations_cond2})",
        "least stable destinations (final phi):",
    ]
    lines += [f"  {prefix} {phi}" for prefix, phi in pipeline.least_stable(10)]
    return "\n".join(lines) + "\n"


def run_analyze(cfg: RunConfig) -> int:
    try:
        cfg.validate()
    except ValueError as exc:
        _err(f"invalid configuration: {exc}")
        return EXIT_CONFIG
    try:
        records = read_trace(cfg.input_path)
    except OSError as exc:
        _err(f"cannot read {cfg.input_path}: {exc.strerror or exc}")
        return EXIT_INPUT
    except (ParseError, UnicodeDecodeError) as exc:
        _err(f"{cfg.input_path}: {exc}")
        return EXIT_INPUT
    if not records:
        _err(f"{cfg.input_path}: trace holds no records")
        return EXIT_EMPTY
    try:
        buckets = bucketize(records, TraceConfig(cfg.mrai_seconds, cfg.t0_override, cfg.t_end))
    except TraceError as exc:
        _err(f"{cfg.input_path}: {exc}")
        return EXIT_INPUT

    opts = PipelineOptions(branch=cfg.decreasing_branch,
                           use_med=cfg.med_mode == MedMode.USE,
                           rank_truncation=cfg.rank_truncation)
    pipeline = StabilityPipeline(opts)
    pipeline.run(buckets)
    rows = assemble_timeseries(pipeline.results, cfg.thresholds())

    out = Path(cfg.output_dir)
    atomic_write(out / TIMESERIES_FILE, timeseries_csv(rows))
    atomic_write(out / STRETCH_FILE, stretch_csv(stretch_distribution(pipeline.loc_rib, pipeline.adj)))
    atomic_write(out / CONSISTENCY_FILE, consistency_csv(pipeline.consistency))
    atomic_write(out / SUMMARY_FILE, summary_text(cfg, len(records), pipeline, rows))
    return EXIT_OK


def run_generate(kind: str, prefixes: int, peers: int, buckets: int, seed: int, out: str,
                 mrai_seconds: int = DEFAULT_MRAI) -> int:
    try:
        scenario = SyntheticScenario(ScenarioKind(kind), prefixes, peers, buckets, seed, mrai_seconds)
    except ValueError as exc:
        _err(f"invalid scenario: {exc}")
        return EXIT_CONFIG
    text = "".join(format_trace_record(r) + "\n" for r in generate_synthetic(scenario))
    atomic_write(Path(out), text)
    return EXIT_OK


def run_selftest(branch: DecreasingBranch = DecreasingBranch.INVERTED) -> int:
    return EXIT_OK if selftest.run_all(branch) else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bgpstab", description="Local stability metrics for BGP update traces.")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="compute stability metrics for a trace")
    a.add_argument("--input", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--mrai", type=int, default=DEFAULT_MRAI, help="bucket width in seconds (default 30)")
    a.add_argument("--alpha", type=float, default=0.01)
    a.add_argument("--beta", type=float, default=0.05)
    a.add_argument("--window", type=int, default=10, help="trailing buckets for the windowed class")
    a.add_argument("--t0", type=int, default=None, help="measurement start (default: first record)")
    a.add_argument("--t-end", type=int, default=None,
                   help="measurement end; emits quiet buckets after the last record")
    a.add_argument("--decreasing-branch", choices=[b.value for b in DecreasingBranch],
                   default=DecreasingBranch.INVERTED.value)
    a.add_argument("--med", choices=[MedMode.USE, MedMode.ZERO], default=MedMode.USE)
    a.add_argument("--rank", choices=[r.value for r in RankTruncation], default=RankTruncation.FULL.value,
                   help="rank key used by the consistency check")

    g = sub.add_parser("generate", help="write a synthetic trace")
    g.add_argument("--kind", required=True, choices=[k.value for k in ScenarioKind])
    g.add_argument("--prefixes", type=int, required=True)
    g.add_argument("--peers", type=int, required=True)
    g.add_argument("--buckets", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--mrai", type=int, default=DEFAULT_MRAI)
    g.add_argument("--out", required=True)

    s = sub.add_parser("selftest", help="run the built-in oracle suites")
    s.add_argument("--decreasing-branch", choices=[b.value for b in DecreasingBranch],
                   default=DecreasingBranch.INVERTED.value)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "analyze":
        cfg = RunConfig(
            input_path=args.input,
            output_dir=args.out,
            mrai_seconds=args.mrai,
            alpha=args.alpha,
            beta=args.beta,
            window=args.window,
            t0_override=args.t0,
            t_end=args.t_end,
            decreasing_branch=DecreasingBranch(args.decreasing_branch),
            med_mode=args.med,
            rank_truncation=RankTruncation(args.rank),
        )
        return run_analyze(cfg)
    if args.command == "generate":
        return run_generate(args.kind, args.prefixes, args.peers, args.buckets, args.seed, args.out, args.mrai)
    return run_selftest(DecreasingBranch(args.decreasing_branch))


if __name__ == "__main__":
    sys.exit(main())
