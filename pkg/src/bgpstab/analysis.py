"""Stretch distribution, ranking/stability consistency, and report tables."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import List, Mapping, Sequence, Tuple

from .metrics import RelativeStability, StabilityClass, TableStability, Thresholds, most_stable, windowed_classes
from .model import PeerId, Prefix
from .rib import AdjRibIn, LocRib, RankTuple


class RankTruncation(Enum):
    FULL = "full"
    PATH_LEN_ONLY = "pathlen"


@dataclass(frozen=True)
class StretchBin:
    dlen: int
    count: int
    cum_fraction: float


def stretch_distribution(loc_rib: LocRib, adj: AdjRibIn) -> List[StretchBin]:
    """Histogram of selected-path length minus most-stable-path length.

    Positive ``dlen`` means switching to the most stable route would shorten
    the AS path. Destinations without a non-withdrawn candidate are skipped.
    """
    counts: Counter = Counter()
    for prefix in sorted(loc_rib):
        candidates = {c.peer: c for c in adj.candidates(prefix)}
        if not candidates:
            continue
        peer, _ = most_stable({p: c.phi for p, c in candidates.items()})
        counts[loc_rib[prefix].route.path_len - candidates[peer].route.path_len] += 1

    total = sum(counts.values())
    bins = []
    running = 0
    for dlen in sorted(counts):
        running += counts[dlen]
        bins.append(StretchBin(dlen, counts[dlen], running / total))
    return bins


@dataclass
class ConsistencyReport:
    checked: int = 0
    violations_cond1: int = 0
    violations_cond2: int = 0
    # (prefix, (peer_a, peer_b), (phi_a, phi_b), condition); peer_a is the preferred one
    examples: List[Tuple[Prefix, Tuple[PeerId, PeerId], Tuple[int, int], int]] = field(default_factory=list)
    limit: int = 20

    def note(self, prefix, peers, phis, condition):
        if condition == 1:
            self.violations_cond1 += 1
        else:
            self.violations_cond2 += 1
        if len(self.examples) < self.limit:
            self.examples.append((prefix, peers, phis, condition))

    def merge(self, other: "ConsistencyReport") -> None:
        self.checked += other.checked
        self.violations_cond1 += other.violations_cond1
        self.violations_cond2 += other.violations_cond2
        room = self.limit - len(self.examples)
        self.examples.extend(other.examples[:max(room, 0)])


def _key(r: RankTuple, truncation: RankTruncation):
    return (r.path_len,) if truncation is RankTruncation.PATH_LEN_ONLY else tuple(r)


def consistency_check(
    candidates: Mapping[Prefix, Sequence[Tuple[RankTuple, int]]],
    truncation: RankTruncation = RankTruncation.FULL,
    limit: int = 20,
) -> ConsistencyReport:
    """Check every candidate pair against the ranking/stability conditions.

    Condition 1: a strictly preferred route must not be strictly less stable
    (higher phi). Condition 2: equally ranked routes must have equal phi.
    """
    report = ConsistencyReport(limit=limit)
    for prefix in sorted(candidates):
        for (ra, pa), (rb, pb) in combinations(candidates[prefix], 2):
            report.checked += 1
            ka, kb = _key(ra, truncation), _key(rb, truncation)
            if kb < ka:
                (ra, pa, ka), (rb, pb, kb) = (rb, pb, kb), (ra, pa, ka)
            peers = (ra.peer_tiebreak, rb.peer_tiebreak)
            if ka < kb and pa > pb:
                report.note(prefix, peers, (pa, pb), 1)
            elif ka == kb and pa != pb:
                report.note(prefix, peers, (pa, pb), 2)
    return report


@dataclass(frozen=True)
class BucketResult:
    """Raw per-bucket metric outputs, before cumulative columns are added."""

    k: int
    table: TableStability
    rel_stable: RelativeStability
    rel_selected: RelativeStability


@dataclass(frozen=True)
class BucketMetrics:
    k: int
    table_mu: float
    table_sigma2: float
    cum_sigma2_table: float
    rel_stable_mu: float
    rel_stable_sigma2: float
    cum_sigma2_stable: float
    rel_selected_mu: float
    rel_selected_sigma2: float
    cum_sigma2_selected: float
    max_rel_stable: float
    max_rel_selected: float
    class_bucket: StabilityClass
    class_window: StabilityClass


def assemble_timeseries(results: Sequence[BucketResult], th: Thresholds) -> List[BucketMetrics]:
    for prev, cur in zip(results, results[1:]):
        if cur.k <= prev.k:
            raise ValueError(f"bucket indices not ascending: {prev.k} then {cur.k}")
    mus = [r.table.mu for r in results]
    window = windowed_classes(mus, th)
    rows = []
    cum_table = cum_stable = cum_selected = 0.0
    for r, cls_window in zip(results, window):
        cum_table += r.table.sigma2
        cum_stable += r.rel_stable.sigma2
        cum_selected += r.rel_selected.sigma2
        rows.append(BucketMetrics(
            k=r.k,
            table_mu=r.table.mu,
            table_sigma2=r.table.sigma2,
            cum_sigma2_table=cum_table,
            rel_stable_mu=r.rel_stable.mu,
            rel_stable_sigma2=r.rel_stable.sigma2,
            cum_sigma2_stable=cum_stable,
            rel_selected_mu=r.rel_selected.mu,
            rel_selected_sigma2=r.rel_selected.sigma2,
            cum_sigma2_selected=cum_selected,
            max_rel_stable=r.rel_stable.max,
            max_rel_selected=r.rel_selected.max,
            class_bucket=th.classify_one(r.table.mu),
            class_window=cls_window,
        ))
    return rows


# -- CSV rendering -------------------------------------------------------------

TIMESERIES_HEADER = [
    "k", "table_mu", "table_sigma2", "cum_sigma2_table",
    "rel_stable_mu", "rel_stable_sigma2", "cum_sigma2_stable",
    "rel_selected_mu", "rel_selected_sigma2", "cum_sigma2_selected",
    "max_rel_stable", "max_rel_selected", "class_bucket", "class_window",
]


def fmt_real(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6f}"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def timeseries_csv(rows: Sequence[BucketMetrics]) -> str:
    out = []
    for m in rows:
        reals = [getattr(m, name) for name in TIMESERIES_HEADER[1:12]]
        out.append([m.k, *map(fmt_real, reals), m.class_bucket.value, m.class_window.value])
    return _csv_text(TIMESERIES_HEADER, out)


def stretch_csv(bins: Sequence[StretchBin]) -> str:
    return _csv_text(["dlen", "count", "cum_fraction"],
                     [[b.dlen, b.count, fmt_real(b.cum_fraction)] for b in bins])


def consistency_csv(report: ConsistencyReport) -> str:
    text = _csv_text(["checked", "violations_cond1", "violations_cond2"],
                     [[report.checked, report.violations_cond1, report.violations_cond2]])
    lines = [text]
    if report.examples:
        lines.append("# examples: prefix,preferred_peer,other_peer,phi_preferred,phi_other,condition\n")
        for prefix, (pa, pb), (fa, fb), cond in report.examples:
            lines.append(f"# {prefix},{pa},{pb},{fa},{fb},{cond}\n")
    return "".join(lines)
