"""Route, update and time-bucket types shared by every stage of the pipeline."""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

MAX_ASN = 2**32 - 1

# Prefixes and peer ids travel as plain strings. Python compares str by code
# point, which for UTF-8 text is the same as byte-wise comparison.
Prefix = str
PeerId = str
AsPath = Tuple[int, ...]


class Origin(Enum):
    IGP = "IGP"
    EGP = "EGP"
    INCOMPLETE = "INCOMPLETE"


class Kind(Enum):
    ANNOUNCE = "A"
    WITHDRAW = "W"


def canonical_prefix(text: str) -> Prefix:
    """Return the canonical CIDR text for `text` (host bits cleared).

    Raises ValueError on anything that is not an IPv4/IPv6 prefix.
    """
    if not isinstance(text, str) or not text:
        raise ValueError("empty prefix")
    if "/" not in text:
        raise ValueError(f"prefix without mask length: {text!r}")
    try:
        net = ipaddress.ip_network(text, strict=False)
    except ValueError as exc:
        raise ValueError(f"invalid prefix {text!r}: {exc}") from None
    return net.with_prefixlen


def check_peer(text: str) -> PeerId:
    if not isinstance(text, str) or not text:
        raise ValueError("empty peer id")
    return text


def as_path(hops) -> AsPath:
    path = tuple(hops)
    for asn in path:
        if isinstance(asn, bool) or not isinstance(asn, int) or not 0 <= asn <= MAX_ASN:
            raise ValueError(f"AS number out of range: {asn!r}")
    return path


@dataclass(frozen=True)
class RouteAttributes:
    origin: Optional[Origin] = None
    med: Optional[int] = None
    next_hop: Optional[str] = None
    communities: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if self.med is not None and self.med < 0:
            raise ValueError("MED must be non-negative")
        if self.communities is not None and not isinstance(self.communities, tuple):
            object.__setattr__(self, "communities", tuple(self.communities))

    @property
    def empty(self) -> bool:
        return self == EMPTY_ATTRS


EMPTY_ATTRS = RouteAttributes()


@dataclass(frozen=True)
class Route:
    """One route to a destination; an empty path is a withdrawal."""

    destination: Prefix
    path: AsPath = ()
    attrs: RouteAttributes = EMPTY_ATTRS

    def __post_init__(self):
        if not isinstance(self.path, tuple):
            object.__setattr__(self, "path", tuple(self.path))
        if self.withdrawn and not self.attrs.empty:
            raise ValueError("a withdrawal carries no attributes")

    @property
    def withdrawn(self) -> bool:
        return not self.path

    @classmethod
    def withdrawal(cls, destination: Prefix) -> "Route":
        return cls(destination)

    @property
    def path_len(self) -> int:
        return len(self.path)


@dataclass(frozen=True)
class UpdateRecord:
    t: int
    peer: PeerId
    kind: Kind
    route: Route

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("negative timestamp")
        if (self.kind is Kind.WITHDRAW) != self.route.withdrawn:
            raise ValueError("record kind does not match route withdrawal state")

    @property
    def prefix(self) -> Prefix:
        return self.route.destination


def routes_differ(a: Route, b: Route) -> bool:
    """True when `b` changes the path, any attribute, or the withdrawal state of `a`."""
    if a.destination != b.destination:
        raise ValueError("different destinations")
    return a.path != b.path or a.attrs != b.attrs


def bucket_index(t: int, t0: int, mrai_seconds: int) -> int:
    if t < t0:
        raise ValueError(f"timestamp {t} precedes t0={t0}")
    return (t - t0) // mrai_seconds
