from bgpstab.ingest import BucketedUpdates, SyntheticScenario, ScenarioKind, TraceConfig, bucketize, generate_synthetic
from bgpstab.model import Route, RouteAttributes
from bgpstab.pipeline import PipelineOptions, StabilityPipeline


def announce(prefix, path, **attrs):
    return Route(prefix, tuple(path), RouteAttributes(**attrs))


def run_scenario(kind, prefixes, peers, buckets, seed=0, options=None):
    s = SyntheticScenario(ScenarioKind(kind), prefixes, peers, buckets, seed)
    cfg = TraceConfig(mrai_seconds=s.mrai_seconds, t_end=s.t_end)
    pipeline = StabilityPipeline(options or PipelineOptions())
    pipeline.run(bucketize(generate_synthetic(s), cfg))
    return pipeline


def run_states(states_per_bucket, options=None):
    """Drive a pipeline from a list of {(peer, prefix): route} dicts."""
    pipeline = StabilityPipeline(options or PipelineOptions())
    pipeline.run(BucketedUpdates(k, dict(states)) for k, states in enumerate(states_per_bucket))
    return pipeline
