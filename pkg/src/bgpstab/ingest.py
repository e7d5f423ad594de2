"""Trace I/O, MRAI bucketing and synthetic trace generation.

A trace is line-oriented JSON::

    {"t":100,"peer":"10.0.0.1","prefix":"203.0.113.0/24","type":"A","as_path":[65001,65002],"attrs":{"origin":"IGP"}}
    {"t":130,"peer":"10.0.0.1","prefix":"203.0.113.0/24","type":"W"}

Lines starting with ``#`` are comments. Files may be gzip-compressed.
"""

from __future__ import annotations

import gzip
import io
import ipaddress
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from .model import (
    Kind,
    Origin,
    PeerId,
    Prefix,
    Route,
    RouteAttributes,
    UpdateRecord,
    as_path,
    bucket_index,
    canonical_prefix,
    check_peer,
)

DEFAULT_MRAI = 30

_ANNOUNCE_KEYS = {"t", "peer", "prefix", "type", "as_path", "attrs"}
_WITHDRAW_KEYS = {"t", "peer", "prefix", "type"}
_ATTR_KEYS = {"origin", "med", "next_hop", "communities"}


class ParseError(ValueError):
    def __init__(self, reason: str, lineno: Optional[int] = None):
        self.reason = reason
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(f"{where}{reason}")


class TraceError(ValueError):
    pass


def _int_field(obj: dict, key: str) -> int:
    value = obj.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"field {key!r} must be an integer")
    return value


def _parse_attrs(raw) -> RouteAttributes:
    if not isinstance(raw, dict):
        raise ParseError("'attrs' must be an object")
    unknown = set(raw) - _ATTR_KEYS
    if unknown:
        raise ParseError(f"unknown attribute(s): {', '.join(sorted(unknown))}")
    origin = raw.get("origin")
    if origin is not None:
        try:
            origin = Origin(origin)
        except ValueError:
            raise ParseError(f"unknown origin {origin!r}") from None
    med = raw.get("med")
    if med is not None and (isinstance(med, bool) or not isinstance(med, int) or med < 0):
        raise ParseError("'med' must be a non-negative integer")
    next_hop = raw.get("next_hop")
    if next_hop is not None and not isinstance(next_hop, str):
        raise ParseError("'next_hop' must be text")
    communities = raw.get("communities")
    if communities is not None:
        if not isinstance(communities, list) or not all(isinstance(c, str) for c in communities):
            raise ParseError("'communities' must be an array of text")
        communities = tuple(communities)
    return RouteAttributes(origin=origin, med=med, next_hop=next_hop, communities=communities)


def parse_trace_record(line: str, lineno: Optional[int] = None) -> UpdateRecord:
    """Decode one canonical trace line into an UpdateRecord."""
    try:
        return _parse(line)
    except ParseError as exc:
        raise ParseError(exc.reason, lineno) from None


def _parse(line: str) -> UpdateRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ParseError("record is not an object")

    kind_text = obj.get("type")
    try:
        kind = Kind(kind_text)
    except ValueError:
        raise ParseError(f"unknown record type {kind_text!r}") from None

    allowed = _ANNOUNCE_KEYS if kind is Kind.ANNOUNCE else _WITHDRAW_KEYS
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"unexpected field(s): {', '.join(sorted(unknown))}")
    missing = {"t", "peer", "prefix"} - set(obj)
    if missing:
        raise ParseError(f"missing field(s): {', '.join(sorted(missing))}")

    t = _int_field(obj, "t")
    if t < 0:
        raise ParseError("negative timestamp")
    try:
        peer = check_peer(obj["peer"])
        prefix = canonical_prefix(obj["prefix"])
    except ValueError as exc:
        raise ParseError(str(exc)) from None

    if kind is Kind.WITHDRAW:
        return UpdateRecord(t, peer, kind, Route.withdrawal(prefix))

    hops = obj.get("as_path")
    if not isinstance(hops, list) or not hops:
        raise ParseError("announce needs a non-empty 'as_path' array")
    if any(isinstance(h, bool) or not isinstance(h, int) for h in hops):
        raise ParseError("'as_path' must hold integers")
    try:
        path = as_path(hops)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    attrs = _parse_attrs(obj.get("attrs", {}))
    return UpdateRecord(t, peer, kind, Route(prefix, path, attrs))


def format_trace_record(rec: UpdateRecord) -> str:
    obj: dict = {"t": rec.t, "peer": rec.peer, "prefix": rec.prefix, "type": rec.kind.value}
    if rec.kind is Kind.ANNOUNCE:
        obj["as_path"] = list(rec.route.path)
        a = rec.route.attrs
        attrs: dict = {}
        if a.origin is not None:
            attrs["origin"] = a.origin.value
        if a.med is not None:
            attrs["med"] = a.med
        if a.next_hop is not None:
            attrs["next_hop"] = a.next_hop
        if a.communities is not None:
            attrs["communities"] = list(a.communities)
        obj["attrs"] = attrs
    return json.dumps(obj, separators=(",", ":"))


def _open_text(path) -> io.TextIOBase:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"\x1f\x8b":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def iter_trace_lines(lines: Iterable[str]) -> Iterator[UpdateRecord]:
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        yield parse_trace_record(text, lineno)


def read_trace(path) -> List[UpdateRecord]:
    """Read every record of a plain or gzip-compressed trace file."""
    with _open_text(path) as fh:
        return list(iter_trace_lines(fh))


def write_trace(records: Iterable[UpdateRecord], fh) -> None:
    for rec in records:
        fh.write(format_trace_record(rec))
        fh.write("\n")


# -- bucketing ---------------------------------------------------------------


@dataclass
class TraceConfig:
    mrai_seconds: int = DEFAULT_MRAI
    t0: Optional[int] = None
    # Last observed instant; extends the bucket sequence past the final record.
    t_end: Optional[int] = None

    def __post_init__(self):
        if self.mrai_seconds < 1:
            raise ValueError("mrai_seconds must be >= 1")


@dataclass
class BucketedUpdates:
    k: int
    final_states: Dict[Tuple[PeerId, Prefix], Route] = field(default_factory=dict)


def bucketize(records: Iterable[UpdateRecord], cfg: TraceConfig = None) -> List[BucketedUpdates]:
    """Collapse records into per-MRAI buckets, last writer wins per (peer, prefix).

    Every bucket index from 0 up to the last record (or ``cfg.t_end``) is
    emitted, including empty ones.
    """
    cfg = cfg or TraceConfig()
    buckets: List[BucketedUpdates] = []
    t0 = cfg.t0
    last_t = None
    for rec in records:
        if t0 is None:
            t0 = rec.t
        if last_t is not None and rec.t < last_t:
            raise TraceError(f"trace not sorted: t={rec.t} after t={last_t}")
        last_t = rec.t
        if rec.t < t0:
            raise TraceError(f"record at t={rec.t} precedes t0={t0}")
        k = bucket_index(rec.t, t0, cfg.mrai_seconds)
        while len(buckets) <= k:
            buckets.append(BucketedUpdates(len(buckets)))
        buckets[k].final_states[(rec.peer, rec.prefix)] = rec.route

    if cfg.t_end is not None and t0 is not None:
        if cfg.t_end < t0:
            raise TraceError(f"t_end={cfg.t_end} precedes t0={t0}")
        k_end = bucket_index(cfg.t_end, t0, cfg.mrai_seconds)
        while len(buckets) <= k_end:
            buckets.append(BucketedUpdates(len(buckets)))
    return buckets


# -- synthetic traces --------------------------------------------------------


class ScenarioKind(Enum):
    ALL_STABLE = "all-stable"
    FLAP = "flap"
    PATH_EXPLORATION = "path-exploration"
    MIXED_PEERS = "mixed-peers"


@dataclass(frozen=True)
class SyntheticScenario:
    kind: ScenarioKind
    n_prefixes: int
    n_peers: int
    n_buckets: int
    seed: int = 0
    mrai_seconds: int = DEFAULT_MRAI

    def __post_init__(self):
        for name in ("n_prefixes", "n_peers", "n_buckets", "mrai_seconds"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def t_end(self) -> int:
        return (self.n_buckets - 1) * self.mrai_seconds


def synthetic_peer(j: int) -> PeerId:
    return str(ipaddress.IPv4Address("10.0.0.1") + j)


def synthetic_prefix(i: int) -> Prefix:
    return f"{ipaddress.IPv4Address('100.64.0.0') + 256 * i}/24"


def generate_synthetic(s: SyntheticScenario) -> List[UpdateRecord]:
    """Build a deterministic trace for scenario `s`.

    All records of bucket ``b`` carry ``t = b * mrai_seconds``, so the trace
    starts at t=0. Flapping and exploring routes are the ones of prefix 0.
    """
    rng = random.Random(s.seed)
    peers = [synthetic_peer(j) for j in range(s.n_peers)]
    prefixes = [synthetic_prefix(i) for i in range(s.n_prefixes)]
    origin_as = [rng.randrange(64512, 65535) for _ in prefixes]
    peer_as = [rng.randrange(1, 64000) for _ in peers]
    per_bucket: List[List[UpdateRecord]] = [[] for _ in range(s.n_buckets)]

    def announce(b, j, i, path, med=None):
        attrs = RouteAttributes(origin=Origin.IGP, med=med, next_hop=peers[j])
        route = Route(prefixes[i], as_path(path), attrs)
        per_bucket[b].append(UpdateRecord(b * s.mrai_seconds, peers[j], Kind.ANNOUNCE, route))

    def withdraw(b, j, i):
        route = Route.withdrawal(prefixes[i])
        per_bucket[b].append(UpdateRecord(b * s.mrai_seconds, peers[j], Kind.WITHDRAW, route))

    def transit_path(j, i, length):
        if length == 1:
            return [origin_as[i]]
        middle = [rng.randrange(1, 64000) for _ in range(length - 2)]
        return [peer_as[j], *middle, origin_as[i]]

    if s.kind is ScenarioKind.ALL_STABLE:
        for j in range(s.n_peers):
            for i in range(s.n_prefixes):
                announce(0, j, i, transit_path(j, i, rng.randint(1, 4)))

    elif s.kind is ScenarioKind.FLAP:
        for j in range(s.n_peers):
            for i in range(s.n_prefixes):
                if (i, j) == (0, 0):
                    continue
                announce(0, j, i, transit_path(j, i, rng.randint(1, 4)))
        flap_path = transit_path(0, 0, 2)
        for b in range(s.n_buckets):
            if b % 2 == 0:
                announce(b, 0, 0, flap_path)
            else:
                withdraw(b, 0, 0)

    elif s.kind is ScenarioKind.PATH_EXPLORATION:
        for j in range(s.n_peers):
            for i in range(s.n_prefixes):
                if (i, j) == (0, 0):
                    continue
                announce(0, j, i, transit_path(j, i, rng.randint(1, 4)))
        explored = transit_path(0, 0, 2)
        for b in range(s.n_buckets):
            if b == s.n_buckets - 1 and s.n_buckets > 1:
                withdraw(b, 0, 0)
            else:
                # each step prepends one more transit hop in front of the origin
                explored = [explored[0], rng.randrange(1, 64000), *explored[1:]] if b else explored
                announce(b, 0, 0, explored)

    elif s.kind is ScenarioKind.MIXED_PEERS:
        # the last peer flaps between two equally long paths, one hop longer
        # than every stable peer's path
        flapper = s.n_peers - 1
        alternates = {}
        for i in range(s.n_prefixes):
            for j in range(flapper):
                announce(0, j, i, transit_path(j, i, 2))
            base = transit_path(flapper, i, 3)
            alternates[i] = (base, [base[0], base[1] % 63999 + 1, base[2]])
        for b in range(s.n_buckets):
            for i in range(s.n_prefixes):
                announce(b, flapper, i, alternates[i][b % 2])

    records: List[UpdateRecord] = []
    for chunk in per_bucket:
        records.extend(chunk)
    return records
