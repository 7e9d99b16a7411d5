"""Placement policies over a shared eligibility filter.

Every policy filters nodes with :func:`eligible` (request fit, assurance
compliance, real-time compliance). K4S then picks the node whose what-if
objective score is highest; the baselines rank nodes by the usual
orchestrator utilization scores.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .assurance import DEFAULT_GAMMA, GammaTable, threshold_of, tier_from_load
from .model import ClusterState, Job, NodeLoad, Thresholds, WorkerNode
from .objectives import (
    DEFAULT_WEIGHTS,
    AssuranceScope,
    ObjectiveBreakdown,
    ObjectiveModel,
    Weights,
    node_terms,
)

log = logging.getLogger(__name__)

REBALANCE_EPS = 1e-12


class Policy(str, Enum):
    K4S = "k4s"
    LEAST_ALLOCATED = "least_allocated"
    MOST_ALLOCATED = "most_allocated"
    REQUESTED_TO_CAPACITY_RATIO = "requested_to_capacity_ratio"

    @classmethod
    def parse(cls, name: str) -> Policy:
        key = name.strip().lower().replace("-", "_")
        aliases = {
            "k4.0s": "k4s",
            "leastallocated": "least_allocated",
            "mostallocated": "most_allocated",
            "requestedtocapacityratio": "requested_to_capacity_ratio",
            "rtcr": "requested_to_capacity_ratio",
        }
        key = aliases.get(key.replace("_", ""), key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(
                f"unknown policy {name!r}; choose from {', '.join(p.value for p in cls)}"
            ) from None


class RebalanceTrigger(str, Enum):
    NODE_ADD = "node_add"
    EVERY_EVENT = "every_event"
    NEVER = "never"


@dataclass(frozen=True)
class Shape:
    """Piecewise-linear utilization shaping for RequestedToCapacityRatio."""

    points: tuple[tuple[float, float], ...] = ((0.0, 0.0), (1.0, 1.0))

    def __post_init__(self) -> None:
        pts = tuple((float(x), float(y)) for x, y in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValueError("shape needs at least two points")
        xs = [x for x, _ in pts]
        ys = [y for _, y in pts]
        if xs[0] != 0.0 or xs[-1] != 1.0:
            raise ValueError("shape points must span utilization 0 to 1")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("shape utilization points must be strictly increasing")
        if any(b < a for a, b in zip(ys, ys[1:])):
            raise ValueError("shape scores must be non-decreasing")
        if any(not 0.0 <= y <= 1.0 for y in ys):
            raise ValueError("shape scores must lie in [0, 1]")

    def __call__(self, u: float) -> float:
        pts = self.points
        if u <= 0.0:
            return pts[0][1]
        if u >= 1.0:
            return pts[-1][1]
        i = bisect.bisect_right([x for x, _ in pts], u)
        (x0, y0), (x1, y1) = pts[i - 1], pts[i]
        return y0 + (y1 - y0) * (u - x0) / (x1 - x0)


IDENTITY_SHAPE = Shape()


@dataclass(frozen=True)
class PlacementDecision:
    job_id: int
    node_id: int | None
    score: ObjectiveBreakdown | float | None = None

    @property
    def placed(self) -> bool:
        return self.node_id is not None


@dataclass(frozen=True)
class RebalanceMove:
    job_id: int
    source: int
    destination: int
    of_before: float
    of_after: float


def _eligible_load(
    node: WorkerNode, load: NodeLoad, job: Job, thresholds: Thresholds, gamma_table: GammaTable
) -> bool:
    if job.rt and not node.rt:
        return False
    cap = node.capacity.as_tuple()
    used = load.request_total()
    req = job.request.as_tuple()
    if used[0] + req[0] > cap[0] or used[1] + req[1] > cap[1] or used[2] + req[2] > cap[2]:
        return False
    top = load.max_criticality()
    crit = job.criticality if top is None or job.criticality > top else top
    need = threshold_of(crit, thresholds)
    if need <= 0.0:
        return True
    return node.base_assurance * gamma_table[tier_from_load(cap, load, job)] >= need


def eligible(
    node: WorkerNode,
    job: Job,
    state: ClusterState,
    thresholds: Thresholds = Thresholds(),
    gamma_table: GammaTable = DEFAULT_GAMMA,
) -> bool:
    """Whether ``node`` may host ``job`` under the shared filter."""
    return _eligible_load(node, state.loads[node.id], job, thresholds, gamma_table)


def eligible_nodes(
    state: ClusterState,
    job: Job,
    thresholds: Thresholds,
    gamma_table: GammaTable,
    exclude: Iterable[int] = (),
) -> list[int]:
    skip = set(exclude)
    return [
        nid
        for nid in state.node_ids
        if nid not in skip
        and _eligible_load(state.nodes[nid], state.loads[nid], job, thresholds, gamma_table)
    ]


def schedule_k4s(
    state: ClusterState,
    job: Job,
    weights: Weights = DEFAULT_WEIGHTS,
    thresholds: Thresholds = Thresholds(),
    gamma_table: GammaTable = DEFAULT_GAMMA,
    scope: AssuranceScope = AssuranceScope.RT_ONLY,
    exclude: Iterable[int] = (),
) -> PlacementDecision:
    """Greedy what-if placement of a pending job.

    Scores the objective of the state with the job on each eligible node and
    of the state with the job left pending. Places on the best node (lowest id
    on ties) unless leaving it pending scores strictly higher.
    """
    if job.id not in state.pending:
        raise ValueError(f"job {job.id} is not pending")
    candidates = eligible_nodes(state, job, thresholds, gamma_table, exclude)
    if not candidates:
        return PlacementDecision(job.id, None, None)
    model = ObjectiveModel(weights, gamma_table, scope)
    terms = model.terms(state)
    stay = model.evaluate(state, terms)
    index = {nid: i for i, nid in enumerate(state.node_ids)}
    best_nid, best = None, None
    g = gamma_table
    for nid in candidates:
        value = node_terms(state.nodes[nid], state.loads[nid], g, job)
        bd = model.evaluate_with(state, terms, index[nid], value, +1)
        if best is None or bd.score > best.score:
            best_nid, best = nid, bd
    if best.score >= stay.score:
        state.assign(job.id, best_nid)
        return PlacementDecision(job.id, best_nid, best)
    return PlacementDecision(job.id, None, stay)


def _requested_after(node: WorkerNode, job: Job, used: Sequence[int]) -> list[float]:
    cap = node.capacity
    return [(used[z] + job.request[z]) / cap[z] for z in range(3)]


def _catalog_used(node: WorkerNode, catalog: dict[int, Job]) -> list[int]:
    return NodeLoad.from_jobs(catalog[j] for j in node.jobs if j in catalog).request_total()


def score_least_allocated(node: WorkerNode, job: Job, catalog: dict[int, Job]) -> float:
    util = _requested_after(node, job, _catalog_used(node, catalog))
    return sum(1.0 - u for u in util) / 3


def score_most_allocated(node: WorkerNode, job: Job, catalog: dict[int, Job]) -> float:
    util = _requested_after(node, job, _catalog_used(node, catalog))
    return sum(util) / 3


def score_requested_to_capacity_ratio(
    node: WorkerNode, job: Job, catalog: dict[int, Job], shape: Shape = IDENTITY_SHAPE
) -> float:
    util = _requested_after(node, job, _catalog_used(node, catalog))
    return sum(shape(u) for u in util) / 3


def _baseline_score(policy: Policy, util: list[float], shape: Shape) -> float:
    if policy is Policy.LEAST_ALLOCATED:
        return sum(1.0 - u for u in util) / 3
    if policy is Policy.MOST_ALLOCATED:
        return sum(util) / 3
    return sum(shape(u) for u in util) / 3


def schedule_baseline(
    state: ClusterState,
    job: Job,
    policy: Policy,
    thresholds: Thresholds = Thresholds(),
    gamma_table: GammaTable = DEFAULT_GAMMA,
    shape: Shape = IDENTITY_SHAPE,
) -> PlacementDecision:
    if policy is Policy.K4S:
        raise ValueError("schedule_baseline does not handle K4S")
    if job.id not in state.pending:
        raise ValueError(f"job {job.id} is not pending")
    best_nid, best = None, None
    for nid in eligible_nodes(state, job, thresholds, gamma_table):
        node = state.nodes[nid]
        util = _requested_after(node, job, state.loads[nid].request_total())
        s = _baseline_score(policy, util, shape)
        if best is None or s > best:
            best_nid, best = nid, s
    if best_nid is None:
        return PlacementDecision(job.id, None, None)
    state.assign(job.id, best_nid)
    return PlacementDecision(job.id, best_nid, best)


def rebalance(
    state: ClusterState,
    weights: Weights = DEFAULT_WEIGHTS,
    thresholds: Thresholds = Thresholds(),
    gamma_table: GammaTable = DEFAULT_GAMMA,
    max_moves: int = 100,
    scope: AssuranceScope = AssuranceScope.RT_ONLY,
) -> list[RebalanceMove]:
    """Move placed jobs while doing so strictly raises the objective.

    Each round finds the (node, job) whose removal gains the most objective,
    then re-places that job on another node with the K4S what-if rule. The
    round is kept only if the end result beats the starting score; otherwise
    the job goes back and rebalancing stops.
    """
    model = ObjectiveModel(weights, gamma_table, scope)
    catalog = state.jobs_catalog
    moves: list[RebalanceMove] = []
    for _ in range(max_moves):
        terms = model.terms(state)
        before = model.evaluate(state, terms).score
        pick = None
        for idx, nid in enumerate(state.node_ids):
            node, load = state.nodes[nid], state.loads[nid]
            for jid in sorted(node.jobs):
                job = catalog[jid]
                load.remove(job)
                value = node_terms(node, load, gamma_table)
                load.add(job)
                gain = model.evaluate_with(state, terms, idx, value, -1).score - before
                if pick is None or gain > pick[0]:
                    pick = (gain, nid, jid)
        if pick is None:
            break
        _, src, jid = pick
        state.unassign(jid)
        decision = schedule_k4s(state, catalog[jid], weights, thresholds, gamma_table, scope, exclude=(src,))
        after = model.evaluate(state).score
        if decision.placed and after > before + REBALANCE_EPS:
            moves.append(RebalanceMove(jid, src, decision.node_id, before, after))
            log.debug("rebalance: job %d %d -> %d (%.6f -> %.6f)", jid, src, decision.node_id, before, after)
            continue
        if decision.placed:
            state.unassign(jid)
        state.assign(jid, src)
        break
    return moves


@dataclass(frozen=True)
class Scheduler:
    """A policy plus all the parameters it needs."""

    policy: Policy = Policy.K4S
    weights: Weights = DEFAULT_WEIGHTS
    thresholds: Thresholds = field(default_factory=Thresholds)
    gamma_table: GammaTable = DEFAULT_GAMMA
    shape: Shape = IDENTITY_SHAPE
    scope: AssuranceScope = AssuranceScope.RT_ONLY
    rebalance_on: RebalanceTrigger = RebalanceTrigger.NODE_ADD
    max_moves: int = 100

    def place(self, state: ClusterState, job: Job) -> PlacementDecision:
        if self.policy is Policy.K4S:
            return schedule_k4s(state, job, self.weights, self.thresholds, self.gamma_table, self.scope)
        return schedule_baseline(state, job, self.policy, self.thresholds, self.gamma_table, self.shape)

    def rebalance(self, state: ClusterState) -> list[RebalanceMove]:
        if self.policy is not Policy.K4S:
            return []
        return rebalance(state, self.weights, self.thresholds, self.gamma_table, self.max_moves, self.scope)


def retry_pending(state: ClusterState, scheduler: Scheduler) -> list[PlacementDecision]:
    """Offer every pending job, oldest first, to the scheduler again."""
    decisions = []
    for jid in state.pending_in_arrival_order():
        decisions.append(scheduler.place(state, state.jobs_catalog[jid]))
    return decisions
