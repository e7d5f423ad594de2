"""Bucket-by-bucket driver: Adj_RIB_In -> Loc_RIB -> stability metrics."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional

from .analysis import (
    BucketResult,
    ConsistencyReport,
    RankTruncation,
    consistency_check,
)
from .ingest import BucketedUpdates
from .metrics import (
    DecreasingBranch,
    aggregate_relative,
    relative_stability,
    route_delta,
    table_delta,
    update_phi,
)
from .model import Prefix, Route, routes_differ
from .rib import AdjRibIn, LocRib, rank, select_loc_rib


@dataclass
class DestinationTrack:
    """Loc_RIB state of one destination, including the withdrawn state."""

    route: Route
    phi: int = 0


@dataclass
class PipelineOptions:
    branch: DecreasingBranch = DecreasingBranch.INVERTED
    use_med: bool = True
    rank_truncation: RankTruncation = RankTruncation.FULL
    example_limit: int = 20


@dataclass
class StabilityPipeline:
    """Feed buckets in ascending order with :meth:`step`.

    Each step compares the state at the end of the previous bucket (t) with
    the state after the new bucket (t+1).
    """

    options: PipelineOptions = field(default_factory=PipelineOptions)
    adj: AdjRibIn = field(default_factory=AdjRibIn)
    loc_rib: LocRib = field(default_factory=dict)
    tracks: Dict[Prefix, DestinationTrack] = field(default_factory=dict)
    consistency: ConsistencyReport = None
    results: List[BucketResult] = field(default_factory=list)
    last_k: Optional[int] = None
    # reference phi per destination, sampled at the end of the previous bucket
    _ref_stable: Dict[Prefix, int] = field(default_factory=dict)
    _ref_selected: Dict[Prefix, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.consistency is None:
            self.consistency = ConsistencyReport(limit=self.options.example_limit)

    def run(self, buckets: Iterable[BucketedUpdates]) -> List[BucketResult]:
        for bucket in buckets:
            self.step(bucket)
        return self.results

    def step(self, bucket: BucketedUpdates) -> BucketResult:
        if self.last_k is not None and bucket.k <= self.last_k:
            raise ValueError(f"bucket {bucket.k} does not follow bucket {self.last_k}")
        self.last_k = bucket.k
        opts = self.options

        changed = self.adj.apply_bucket(bucket)
        self.loc_rib, _ = select_loc_rib(self.adj, changed, self.loc_rib, opts.use_med)
        table = table_delta(self._advance_tracks())

        stable_ratios, selected_ratios = {}, {}
        candidate_ranks = {}
        for prefix in sorted(self.loc_rib):
            cells = self.adj.candidates(prefix)
            ref_stable = self._ref_stable.get(prefix, 0)
            ref_selected = self._ref_selected.get(prefix, 0)
            stable_ratios[prefix] = {c.peer: relative_stability(c.phi, ref_stable) for c in cells}
            selected_ratios[prefix] = {c.peer: relative_stability(c.phi, ref_selected) for c in cells}
            if len(cells) > 1:
                candidate_ranks[prefix] = [(rank(c.route, c.peer, opts.use_med), c.phi) for c in cells]

        self.consistency.merge(
            consistency_check(candidate_ranks, opts.rank_truncation, opts.example_limit))
        result = BucketResult(bucket.k, table,
                              aggregate_relative(stable_ratios),
                              aggregate_relative(selected_ratios))
        self.results.append(result)
        self._sample_references()
        return result

    def _advance_tracks(self) -> List[float]:
        """Step each destination's phi and return the per-route scores."""
        deltas = []
        for prefix in sorted(set(self.tracks) | set(self.loc_rib)):
            entry = self.loc_rib.get(prefix)
            now = entry.route if entry is not None else Route.withdrawal(prefix)
            track = self.tracks.get(prefix)
            if track is None:
                self.tracks[prefix] = DestinationTrack(now)
                deltas.append(route_delta(0, 0, is_new=True))
                continue
            phi_t = track.phi
            track.phi = update_phi(phi_t, routes_differ(track.route, now))
            track.route = now
            deltas.append(route_delta(phi_t, track.phi, branch=self.options.branch))

        for prefix in [p for p, tr in self.tracks.items() if tr.route.withdrawn and tr.phi == 0]:
            del self.tracks[prefix]
        for prefix, entry in self.loc_rib.items():
            phi = self.tracks[prefix].phi
            if entry.phi != phi:
                self.loc_rib[prefix] = replace(entry, phi=phi)
        return deltas

    def _sample_references(self):
        self._ref_stable = {}
        self._ref_selected = {}
        for prefix, entry in self.loc_rib.items():
            cells = self.adj.candidates(prefix)
            self._ref_stable[prefix] = min(c.phi for c in cells)
            self._ref_selected[prefix] = self.adj.get(prefix, entry.source_peer).phi

    def least_stable(self, n: int = 10):
        """Destinations with the highest destination-level phi."""
        ranked = sorted(self.tracks.items(), key=lambda kv: (-kv[1].phi, kv[0]))
        return [(prefix, track.phi) for prefix, track in ranked[:n]]
