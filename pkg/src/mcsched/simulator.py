"""Seeded workload traces and the discrete-event simulation loop.

Traces are drawn with numpy's PCG64 generator (``numpy.random.default_rng``).
The same (config, seed) pair always produces the same trace for a given numpy
release; the serialized trace file is the portable artifact.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .model import ClusterState, Criticality, Job, ResourceVector, StateError, WorkerNode
from .objectives import ObjectiveBreakdown, ObjectiveModel
from .scheduling import RebalanceTrigger, Scheduler, retry_pending

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """A scenario or generator config is invalid."""


class TraceError(ValueError):
    """A trace is malformed or inconsistent."""


class EventKind(str, Enum):
    NODE_ADD = "node_add"
    JOB_ARRIVAL = "job_arrival"
    JOB_END = "job_end"


# same-tick processing order: free resources first, then grow, then admit
_KIND_RANK = {EventKind.JOB_END: 0, EventKind.NODE_ADD: 1, EventKind.JOB_ARRIVAL: 2}


@dataclass(frozen=True)
class Event:
    time: int
    seq: int
    kind: EventKind
    node: WorkerNode | None = None
    job: Job | None = None
    job_id: int | None = None


@dataclass(frozen=True)
class GeneratorConfig:
    initial_nodes: tuple[int, int] = (4, 10)
    job_count: tuple[int, int] = (300, 1000)
    horizon: int = 1000
    node_additions: tuple[int, int] = (0, 5)
    mean_duration: float = 200.0
    request_range: tuple[int, int] = (50, 500)
    limit_factor: tuple[float, float] = (1.0, 2.0)
    criticality_probs: tuple[float, float, float] = (0.5, 0.3, 0.2)
    rt_given_criticality: tuple[float, float, float] = (0.1, 0.5, 0.8)
    capacity_range: tuple[int, int] = (2000, 8000)
    rt_node_prob: float = 0.5
    alpha_beta_rt: tuple[float, float] = (0.35, 0.5)
    alpha_beta_nonrt: tuple[float, float] = (0.2, 0.5)

    def __post_init__(self) -> None:
        for name in ("initial_nodes", "job_count", "node_additions", "request_range", "capacity_range"):
            lo, hi = getattr(self, name)
            if int(lo) != lo or int(hi) != hi:
                raise ConfigError(f"{name} bounds must be integers")
            if lo > hi:
                raise ConfigError(f"{name} range is empty: {lo} > {hi}")
            object.__setattr__(self, name, (int(lo), int(hi)))
        if self.initial_nodes[0] < 0 or self.job_count[0] < 0 or self.node_additions[0] < 0:
            raise ConfigError("counts must be non-negative")
        if self.request_range[0] < 1:
            raise ConfigError("request_range must start at >= 1")
        if self.capacity_range[0] < 1:
            raise ConfigError("capacity_range must start at >= 1")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.mean_duration < 1:
            raise ConfigError("mean_duration must be >= 1")
        lo, hi = self.limit_factor
        if not 1.0 <= lo <= hi:
            raise ConfigError("limit_factor must satisfy 1 <= lo <= hi")
        for name in ("alpha_beta_rt", "alpha_beta_nonrt"):
            lo, hi = getattr(self, name)
            if not 0.0 <= lo <= hi <= 0.5:
                raise ConfigError(f"{name} must satisfy 0 <= lo <= hi <= 0.5")
        probs = self.criticality_probs
        if len(probs) != 3 or any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ConfigError(f"criticality_probs must be 3 non-negative values summing to 1, got {probs}")
        if len(self.rt_given_criticality) != 3 or any(not 0 <= p <= 1 for p in self.rt_given_criticality):
            raise ConfigError("rt_given_criticality must be 3 probabilities")
        if not 0.0 <= self.rt_node_prob <= 1.0:
            raise ConfigError("rt_node_prob must be a probability")
        for name in ("limit_factor", "criticality_probs", "rt_given_criticality", "alpha_beta_rt", "alpha_beta_nonrt"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "mean_duration", float(self.mean_duration))
        object.__setattr__(self, "rt_node_prob", float(self.rt_node_prob))

    def to_dict(self) -> dict:
        return {f.name: _jsonable(getattr(self, f.name)) for f in dataclasses.fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> GeneratorConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown generator keys: {', '.join(sorted(unknown))}")
        kwargs = {}
        for k, v in data.items():
            kwargs[k] = tuple(v) if isinstance(v, list) else v
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc


def _jsonable(value):
    if isinstance(value, tuple):
        return list(value)
    return value


@dataclass
class EventTrace:
    seed: int
    config: GeneratorConfig
    initial_nodes: list[WorkerNode]
    events: list[Event]
    version: int = 1


def _draw_node(rng: np.random.Generator, node_id: int, cfg: GeneratorConfig) -> WorkerNode:
    lo, hi = cfg.capacity_range
    cap = rng.integers(lo, hi + 1, size=3)
    rt = bool(rng.random() < cfg.rt_node_prob)
    ab_lo, ab_hi = cfg.alpha_beta_rt if rt else cfg.alpha_beta_nonrt
    alpha = float(rng.uniform(ab_lo, ab_hi))
    beta = float(rng.uniform(ab_lo, ab_hi))
    return WorkerNode(node_id, ResourceVector.of(cap), min(alpha, 0.5), min(beta, 0.5), rt)


def _draw_job(rng: np.random.Generator, job_id: int, arrival: int, cfg: GeneratorConfig) -> Job:
    lo, hi = cfg.request_range
    request = [int(r) for r in rng.integers(lo, hi + 1, size=3)]
    factors = rng.uniform(cfg.limit_factor[0], cfg.limit_factor[1], size=3)
    limit = [max(r, math.ceil(r * float(f))) for r, f in zip(request, factors)]
    crit = Criticality(int(rng.choice(3, p=cfg.criticality_probs)))
    rt = bool(rng.random() < cfg.rt_given_criticality[crit])
    duration = int(rng.geometric(1.0 / cfg.mean_duration))
    return Job(job_id, ResourceVector(*request), ResourceVector(*limit), crit, rt, arrival, duration)


def generate_trace(config: GeneratorConfig, seed: int) -> EventTrace:
    """Draw a workload trace; deterministic in (config, seed)."""
    rng = np.random.default_rng(seed)
    n_nodes = int(rng.integers(config.initial_nodes[0], config.initial_nodes[1] + 1))
    n_jobs = int(rng.integers(config.job_count[0], config.job_count[1] + 1))
    n_adds = int(rng.integers(config.node_additions[0], config.node_additions[1] + 1))

    initial = [_draw_node(rng, i, config) for i in range(n_nodes)]
    arrivals = np.sort(rng.integers(0, config.horizon, size=n_jobs))
    jobs = [_draw_job(rng, j, int(t), config) for j, t in enumerate(arrivals)]
    add_times = np.sort(rng.integers(0, config.horizon, size=n_adds))
    added = [_draw_node(rng, n_nodes + k, config) for k in range(n_adds)]

    raw: list[tuple[tuple[int, int, int], Event]] = []
    for job in jobs:
        raw.append(((job.arrival_time, _KIND_RANK[EventKind.JOB_ARRIVAL], job.id),
                    Event(job.arrival_time, 0, EventKind.JOB_ARRIVAL, job=job)))
        end = job.arrival_time + job.duration
        raw.append(((end, _KIND_RANK[EventKind.JOB_END], job.id),
                    Event(end, 0, EventKind.JOB_END, job_id=job.id)))
    for t, node in zip(add_times, added):
        raw.append(((int(t), _KIND_RANK[EventKind.NODE_ADD], node.id),
                    Event(int(t), 0, EventKind.NODE_ADD, node=node)))
    raw.sort(key=lambda item: item[0])
    events = [dataclasses.replace(ev, seq=i) for i, (_, ev) in enumerate(raw)]
    return EventTrace(seed=int(seed), config=config, initial_nodes=initial, events=events)


METRIC_FIELDS = ("acceptance", "assurance", "residual", "weighted_sum", "score")


@dataclass(frozen=True)
class MetricsSample:
    time: int
    seq: int
    event: str
    acceptance: float
    assurance: float
    residual: float
    weighted_sum: float
    score: float
    assigned: int
    pending: int
    nodes: int
    moves: int
    finished: int
    arrivals: int


@dataclass
class MetricsSeries:
    policy: str
    samples: list[MetricsSample] = field(default_factory=list)

    def column(self, name: str) -> list:
        return [getattr(s, name) for s in self.samples]

    def time_average(self, name: str) -> float:
        """Piecewise-constant time average of a metric column.

        The last sample at each tick holds until the next tick. Falls back to
        the plain sample mean when all samples share one tick.
        """
        if not self.samples:
            return float("nan")
        last_at: dict[int, float] = {}
        for s in self.samples:
            last_at[s.time] = getattr(s, name)
        ticks = sorted(last_at)
        if len(ticks) == 1:
            values = self.column(name)
            return sum(values) / len(values)
        area = 0.0
        for t0, t1 in zip(ticks, ticks[1:]):
            area += last_at[t0] * (t1 - t0)
        return area / (ticks[-1] - ticks[0])

    def summary(self) -> dict[str, float]:
        return {name: self.time_average(name) for name in METRIC_FIELDS}


Observer = Callable[[ClusterState, Event | None], None]


def run(trace: EventTrace, scheduler: Scheduler, observer: Observer | None = None) -> MetricsSeries:
    """Replay ``trace`` under ``scheduler`` and sample the objective after every event.

    A leading ``init`` sample describes the initial cluster. ``observer`` is
    called with the state after every sample (``None`` event for init).
    """
    state = ClusterState()
    for node in trace.initial_nodes:
        state.add_node(node)
    model = ObjectiveModel(scheduler.weights, scheduler.gamma_table, scheduler.scope)
    series = MetricsSeries(scheduler.policy.value)
    moves = 0
    arrivals = 0

    def sample(t: int, seq: int, kind: str) -> None:
        bd: ObjectiveBreakdown = model.evaluate(state)
        series.samples.append(MetricsSample(
            t, seq, kind, bd.acceptance, bd.assurance, bd.residual, bd.weighted_sum, bd.score,
            len(state.assigned), len(state.pending), len(state.nodes), moves,
            len(state.finished), arrivals,
        ))

    sample(0, -1, "init")
    if observer is not None:
        observer(state, None)
    trigger = scheduler.rebalance_on
    for ev in trace.events:
        state.clock = ev.time
        try:
            if ev.kind is EventKind.NODE_ADD:
                state.add_node(ev.node)
                retry_pending(state, scheduler)
                if trigger is not RebalanceTrigger.NEVER:
                    moves += len(scheduler.rebalance(state))
            elif ev.kind is EventKind.JOB_ARRIVAL:
                state.add_pending(ev.job)
                arrivals += 1
                scheduler.place(state, ev.job)
                if trigger is RebalanceTrigger.EVERY_EVENT:
                    moves += len(scheduler.rebalance(state))
            else:
                if ev.job_id not in state.jobs_catalog:
                    raise TraceError(f"event {ev.seq}: job_end for unknown job {ev.job_id}")
                state.finish(ev.job_id)
                retry_pending(state, scheduler)
                if trigger is RebalanceTrigger.EVERY_EVENT:
                    moves += len(scheduler.rebalance(state))
        except StateError as exc:
            raise TraceError(f"event {ev.seq} ({ev.kind.value} at t={ev.time}): {exc}") from exc
        sample(ev.time, ev.seq, ev.kind.value)
        if observer is not None:
            observer(state, ev)
    log.info(
        "%s: %d events, %d assigned, %d pending, %d rebalance moves",
        series.policy, len(trace.events), len(state.assigned), len(state.pending), moves,
    )
    return series
