"""Local stability metrics for path-vector (BGP) routing tables.

Reconstructs Adj_RIB_In and Loc_RIB state from timestamped update traces and
scores route, table, and relative stability per MRAI interval.
"""

from .analysis import (
    BucketMetrics,
    ConsistencyReport,
    RankTruncation,
    StretchBin,
    assemble_timeseries,
    consistency_check,
    stretch_distribution,
)
from .ingest import (
    BucketedUpdates,
    ParseError,
    ScenarioKind,
    SyntheticScenario,
    TraceConfig,
    TraceError,
    bucketize,
    generate_synthetic,
    parse_trace_record,
    read_trace,
)
from .metrics import (
    Decision,
    DecreasingBranch,
    RelativeStability,
    StabilityClass,
    TableStability,
    Thresholds,
    aggregate_relative,
    classify,
    differential_stability,
    most_stable,
    relative_stability,
    route_delta,
    table_delta,
    update_phi,
)
from .model import Kind, Origin, Route, RouteAttributes, UpdateRecord, canonical_prefix, routes_differ
from .pipeline import PipelineOptions, StabilityPipeline
from .rib import AdjRibIn, LocRibEntry, RankTuple, RibCell, RibDelta, rank, select_loc_rib

__version__ = "0.1.0"
