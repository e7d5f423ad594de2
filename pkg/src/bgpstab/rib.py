"""Adj_RIB_In bookkeeping and Loc_RIB inference.

Best path is chosen by a fixed Zebra-like order with no local policy:
shortest AS_PATH, then lowest origin (IGP < EGP < INCOMPLETE), then lowest
MED (absent counts as 0), then lowest peer id.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, NamedTuple, Optional, Set, Tuple

from .model import Origin, PeerId, Prefix, Route, routes_differ
from .metrics import update_phi

_ORIGIN_RANK = {Origin.IGP: 0, Origin.EGP: 1, Origin.INCOMPLETE: 2}
# Announcements without an ORIGIN attribute rank with INCOMPLETE.
_MISSING_ORIGIN_RANK = 2


class RankTuple(NamedTuple):
    """Preference key; the smaller tuple is the more preferred route."""

    path_len: int
    origin_rank: int
    med: int
    peer_tiebreak: PeerId


def rank(route: Route, peer: PeerId, use_med: bool = True) -> RankTuple:
    if route.withdrawn:
        raise ValueError("cannot rank withdrawal")
    origin = route.attrs.origin
    origin_rank = _ORIGIN_RANK[origin] if origin is not None else _MISSING_ORIGIN_RANK
    med = (route.attrs.med or 0) if use_med else 0
    return RankTuple(route.path_len, origin_rank, med, peer)


@dataclass
class RibCell:
    peer: PeerId
    route: Route
    phi: int = 0
    present: bool = True


class AdjRibIn:
    """Routes received from every peer, keyed by destination then peer.

    Withdrawn routes stay in the table as empty-path cells until their
    stability counter has decayed back to zero.
    """

    def __init__(self):
        self.by_prefix: Dict[Prefix, Dict[PeerId, RibCell]] = {}

    def __len__(self):
        return sum(len(peers) for peers in self.by_prefix.values())

    def __contains__(self, key: Tuple[Prefix, PeerId]):
        prefix, peer = key
        return peer in self.by_prefix.get(prefix, {})

    def get(self, prefix: Prefix, peer: PeerId) -> Optional[RibCell]:
        return self.by_prefix.get(prefix, {}).get(peer)

    def cells(self) -> Iterable[Tuple[Tuple[Prefix, PeerId], RibCell]]:
        for prefix, peers in self.by_prefix.items():
            for peer, cell in peers.items():
                yield (prefix, peer), cell

    def candidates(self, prefix: Prefix) -> List[RibCell]:
        """Non-withdrawn cells for `prefix`, sorted by peer id."""
        peers = self.by_prefix.get(prefix, {})
        return [peers[p] for p in sorted(peers) if not peers[p].route.withdrawn]

    def apply_bucket(self, bucket) -> Set[Tuple[Prefix, PeerId]]:
        """Advance the table by one MRAI interval.

        Installs the bucket's final states, steps every cell's stability
        counter (new cells start at 0), prunes withdrawn cells whose counter
        reached 0, and returns the (prefix, peer) keys that were created by an
        announcement or changed.
        """
        changed: Set[Tuple[Prefix, PeerId]] = set()
        created: Set[Tuple[Prefix, PeerId]] = set()
        for (peer, prefix), route in bucket.final_states.items():
            peers = self.by_prefix.setdefault(prefix, {})
            cell = peers.get(peer)
            if cell is None:
                peers[peer] = RibCell(peer, route)
                created.add((prefix, peer))
                if not route.withdrawn:
                    changed.add((prefix, peer))
            elif routes_differ(cell.route, route):
                cell.route = route
                changed.add((prefix, peer))

        for key, cell in list(self.cells()):
            if key not in created:
                cell.phi = update_phi(cell.phi, key in changed)
        self._prune()
        return changed

    def _prune(self):
        for prefix in list(self.by_prefix):
            peers = self.by_prefix[prefix]
            for peer in [p for p, c in peers.items() if c.route.withdrawn and c.phi == 0]:
                peers[peer].present = False
                del peers[peer]
            if not peers:
                del self.by_prefix[prefix]


@dataclass(frozen=True)
class LocRibEntry:
    route: Route
    phi: int
    rank: RankTuple
    source_peer: PeerId


LocRib = Dict[Prefix, LocRibEntry]


@dataclass
class RibDelta:
    changed_destinations: Set[Prefix] = field(default_factory=set)
    new_destinations: Set[Prefix] = field(default_factory=set)
    removed_destinations: Set[Prefix] = field(default_factory=set)


def best_candidate(cells: Iterable[RibCell], use_med: bool = True) -> Optional[Tuple[RankTuple, RibCell]]:
    best = None
    for cell in cells:
        r = rank(cell.route, cell.peer, use_med)
        if best is None or r < best[0]:
            best = (r, cell)
    return best


def select_loc_rib(
    rib: AdjRibIn,
    changed: Iterable[Tuple[Prefix, PeerId]],
    prev: LocRib,
    use_med: bool = True,
) -> Tuple[LocRib, RibDelta]:
    """Re-run best-path selection for every destination touched by `changed`.

    Entries of untouched destinations are carried over. The returned entry
    keeps the previous entry's phi (0 for new destinations); the caller owns
    the destination-level stability counter.
    """
    new = dict(prev)
    delta = RibDelta()
    for prefix in sorted({p for p, _ in changed}):
        best = best_candidate(rib.candidates(prefix), use_med)
        old = prev.get(prefix)
        if best is None:
            if old is not None:
                del new[prefix]
                delta.removed_destinations.add(prefix)
            continue
        r, cell = best
        if old is None:
            new[prefix] = LocRibEntry(cell.route, 0, r, cell.peer)
            delta.new_destinations.add(prefix)
            continue
        new[prefix] = replace(old, route=cell.route, rank=r, source_peer=cell.peer)
        if routes_differ(old.route, cell.route):
            delta.changed_destinations.add(prefix)
    return new, delta
