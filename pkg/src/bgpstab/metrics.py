"""Route and routing-table stability metrics.

phi is a per-route counter: +1 for every MRAI interval in which the route
changed, -1 (floored at 0) for every quiet interval. The table metric
averages a per-route score in [0, 1] derived from successive phi values;
the relative metrics compare each incoming route's phi with a reference
route (most stable, or currently selected) for the same destination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Sequence, Tuple

from .model import PeerId, Prefix


class DecreasingBranch(Enum):
    """How a decaying route is scored.

    INVERTED scores phi(t+1)/phi(t), which stays in [0, 1). AS_PRINTED keeps
    phi(t)/phi(t+1); it exceeds 1 and divides by zero on 1 -> 0 and is only
    kept for comparison with the literal formula.
    """

    INVERTED = "inverted"
    AS_PRINTED = "as-printed"


class StabilityClass(Enum):
    STABLE = "S"
    MARGINALLY_STABLE = "M"
    UNSTABLE = "U"


class Decision(Enum):
    REPLACE = "replace"
    KEEP = "keep"


def update_phi(phi: int, changed: bool) -> int:
    if changed:
        return phi + 1
    if phi == 0:
        return 0
    return phi - 1


def route_delta(
    phi_t: int,
    phi_t1: int,
    is_new: bool = False,
    branch: DecreasingBranch = DecreasingBranch.INVERTED,
) -> float:
    """Per-route change score for one interval.

    A new route scores 0, as does a route that stayed at phi=0. A route whose
    phi grew scores (phi_t+1)/(phi_t1+1). A decaying route scores
    phi_t1/phi_t, or phi_t/phi_t1 with ``branch=AS_PRINTED`` (``inf`` when
    phi_t1 is 0).
    """
    if is_new:
        return 0.0
    if phi_t < 0 or phi_t1 < 0 or abs(phi_t1 - phi_t) > 1:
        raise ValueError(f"illegal phi transition {phi_t} -> {phi_t1}")
    if phi_t == 0 and phi_t1 == 0:
        return 0.0
    if phi_t1 > phi_t:
        return (phi_t + 1) / (phi_t1 + 1)
    if branch is DecreasingBranch.AS_PRINTED:
        return phi_t / phi_t1 if phi_t1 else math.inf
    return phi_t1 / phi_t


def _mean_var(values: Sequence[float]) -> Tuple[float, float]:
    n = len(values)
    if n == 0:
        return 0.0, 0.0
    mu = math.fsum(values) / n
    if math.isinf(mu) or math.isnan(mu):
        return mu, math.nan
    return mu, math.fsum((x - mu) ** 2 for x in values) / n


@dataclass(frozen=True)
class TableStability:
    mu: float
    sigma2: float
    n: int


def table_delta(deltas: Sequence[float]) -> TableStability:
    """Mean and population variance of per-route scores; empty means stable."""
    deltas = list(deltas)
    mu, sigma2 = _mean_var(deltas)
    return TableStability(mu, sigma2, len(deltas))


def most_stable(phis: Mapping[PeerId, int]) -> Tuple[PeerId, int]:
    """Peer offering the lowest phi, lowest peer id on ties."""
    if not phis:
        raise ValueError("no candidate routes")
    peer = min(phis, key=lambda p: (phis[p], p))
    return peer, phis[peer]


def relative_stability(phi_j_t1: int, phi_ref_t: int) -> float:
    # reference is sampled one interval earlier than the route it scores
    return (phi_j_t1 + 1) / (phi_ref_t + 1)


@dataclass(frozen=True)
class RelativeStability:
    per_destination: Dict[Prefix, float]
    mu: float
    sigma2: float

    @property
    def max(self) -> float:
        return max(self.per_destination.values(), default=0.0)


def aggregate_relative(per_dest_per_peer: Mapping[Prefix, Mapping[PeerId, float]]) -> RelativeStability:
    per_destination = {}
    for prefix in sorted(per_dest_per_peer):
        ratios = per_dest_per_peer[prefix]
        if not ratios:
            raise ValueError(f"no peers for destination {prefix}")
        per_destination[prefix] = math.fsum(ratios.values()) / len(ratios)
    mu, sigma2 = _mean_var(list(per_destination.values()))
    return RelativeStability(per_destination, mu, sigma2)


def differential_stability(phi_current: int, phi_candidate: int) -> Tuple[int, Decision]:
    """Replace the selected route only if the candidate is strictly more stable."""
    delta = phi_current - phi_candidate
    return delta, Decision.REPLACE if delta > 0 else Decision.KEEP


@dataclass(frozen=True)
class Thresholds:
    alpha: float = 0.01
    beta: float = 0.05
    window: int = 10

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if self.alpha >= self.beta:
            raise ValueError(f"alpha ({self.alpha}) must be below beta ({self.beta})")
        if self.window < 1:
            raise ValueError("window must be >= 1")

    def classify_one(self, mu: float) -> StabilityClass:
        if mu <= self.alpha:
            return StabilityClass.STABLE
        if mu <= self.beta:
            return StabilityClass.MARGINALLY_STABLE
        return StabilityClass.UNSTABLE


def windowed_classes(mu_series: Sequence[float], th: Thresholds) -> List[StabilityClass]:
    """Class of the maximum over the trailing `th.window` buckets, per bucket."""
    out = []
    for k in range(len(mu_series)):
        window = mu_series[max(0, k - th.window + 1): k + 1]
        out.append(th.classify_one(max(window)))
    return out


def classify(mu_series: Sequence[float], th: Thresholds) -> Tuple[List[StabilityClass], StabilityClass]:
    """Per-bucket classes plus the class of the final trailing window.

    An empty series is classified stable.
    """
    per_bucket = [th.classify_one(mu) for mu in mu_series]
    if not mu_series:
        return per_bucket, StabilityClass.STABLE
    return per_bucket, th.classify_one(max(mu_series[-th.window:]))
