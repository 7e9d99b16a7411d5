"""Assurance-aware scheduling of mixed-criticality jobs on heterogeneous nodes."""

from .assurance import GammaTable, GuaranteeTier, assurance, assurance_if_assigned, guaranteed_tier, threshold_of
from .model import ClusterState, Criticality, Job, ResourceVector, Thresholds, WorkerNode, free_at_limit, free_at_request
from .objectives import AssuranceScope, ObjectiveBreakdown, Weights, objective
from .scheduling import Policy, Scheduler, Shape, eligible, rebalance, schedule_baseline, schedule_k4s
from .simulator import EventTrace, GeneratorConfig, MetricsSeries, generate_trace, run

__all__ = [
    "AssuranceScope", "ClusterState", "Criticality", "EventTrace", "GammaTable", "GeneratorConfig",
    "GuaranteeTier", "Job", "MetricsSeries", "ObjectiveBreakdown", "Policy", "ResourceVector",
    "Scheduler", "Shape", "Thresholds", "Weights", "WorkerNode", "assurance", "assurance_if_assigned",
    "eligible", "free_at_limit", "free_at_request", "generate_trace", "guaranteed_tier", "objective",
    "rebalance", "run", "schedule_baseline", "schedule_k4s", "threshold_of",
]
