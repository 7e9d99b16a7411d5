"""Normalized objective functions and the product-form scheduling score."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .assurance import DEFAULT_GAMMA, GammaTable, tier_from_load
from .model import ClusterState, Job, NodeLoad, WorkerNode


class AssuranceScope(str, Enum):
    RT_ONLY = "rt_only"
    ALL = "all"


@dataclass(frozen=True, slots=True)
class Weights:
    w_acceptance: float = 0.525
    w_assurance: float = 0.425
    w_residual: float = 0.05

    def __post_init__(self) -> None:
        values = (self.w_acceptance, self.w_assurance, self.w_residual)
        if any(w < 0 for w in values):
            raise ValueError(f"weights must be non-negative, got {values}")
        if abs(sum(values) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {values}; use Weights.normalized()")

    @classmethod
    def normalized(cls, acceptance: float, assurance: float, residual: float) -> Weights:
        """Build weights from raw values such as 52.5, 42.5, 5 by dividing by their sum."""
        raw = (float(acceptance), float(assurance), float(residual))
        if any(w < 0 for w in raw):
            raise ValueError(f"weights must be non-negative, got {raw}")
        total = sum(raw)
        if total <= 0:
            raise ValueError("weights must not all be zero")
        return cls(*(w / total for w in raw))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.w_acceptance, self.w_assurance, self.w_residual)


DEFAULT_WEIGHTS = Weights.normalized(52.5, 42.5, 5)


@dataclass(frozen=True, slots=True)
class ObjectiveBreakdown:
    acceptance: float
    assurance: float
    residual: float
    weighted_sum: float
    score: float


def residual_term(capacity: Sequence[int], limit_total: Sequence[int], extra: Job | None = None) -> float:
    """Squared free-at-limit resources of one node over its squared capacity."""
    num = 0
    den = 0
    for z in range(3):
        used = limit_total[z] + (extra.limit[z] if extra is not None else 0)
        free = capacity[z] - used
        if free > 0:
            num += free * free
        den += capacity[z] * capacity[z]
    return num / den


def node_terms(
    node: WorkerNode, load: NodeLoad, gamma_table: GammaTable, extra: Job | None = None
) -> tuple[float, float]:
    """(assurance, residual term) of a node under ``load`` (+ ``extra``)."""
    cap = node.capacity.as_tuple()
    a = node.base_assurance * gamma_table[tier_from_load(cap, load, extra)]
    return a, residual_term(cap, load.limit_total(), extra)


def combine(
    assigned: int,
    m: int,
    rt_flags: Sequence[bool],
    assurances: Sequence[float],
    residuals: Sequence[float],
    weights: Weights,
    scope: AssuranceScope = AssuranceScope.RT_ONLY,
) -> ObjectiveBreakdown:
    """Fold per-node terms (in node id order) into the objective breakdown."""
    acceptance = assigned / m if m else 1.0
    avg_a = _mean_assurance(rt_flags, assurances, scope)
    resid = sum(residuals) / len(residuals) if residuals else 0.0
    wa, wz, wr = weights.as_tuple()
    weighted = wa * acceptance + wz * avg_a + wr * resid
    return ObjectiveBreakdown(acceptance, avg_a, resid, weighted, acceptance * weighted)


def _mean_assurance(rt_flags, assurances, scope) -> float:
    if not assurances:
        return 0.0
    if scope == AssuranceScope.RT_ONLY:
        rt_values = [a for a, rt in zip(assurances, rt_flags) if rt]
        if rt_values:
            return sum(rt_values) / len(rt_values)
    return sum(assurances) / len(assurances)


def _scratch_terms(state: ClusterState, gamma_table: GammaTable):
    rt_flags, assurances, residuals = [], [], []
    for nid in state.node_ids:
        node = state.nodes[nid]
        load = NodeLoad.from_jobs(state.jobs_catalog[j] for j in node.jobs)
        a, r = node_terms(node, load, gamma_table)
        rt_flags.append(node.rt)
        assurances.append(a)
        residuals.append(r)
    return rt_flags, assurances, residuals


def acceptance_rate(state: ClusterState) -> float:
    assigned = sum(len(n.jobs) for n in state.nodes.values())
    m = len(state.pending) + assigned
    return assigned / m if m else 1.0


def avg_assurance(
    state: ClusterState,
    gamma_table: GammaTable = DEFAULT_GAMMA,
    scope: AssuranceScope = AssuranceScope.RT_ONLY,
) -> float:
    rt_flags, assurances, _ = _scratch_terms(state, gamma_table)
    return _mean_assurance(rt_flags, assurances, scope)


def residual_capacity(state: ClusterState) -> float:
    _, _, residuals = _scratch_terms(state, DEFAULT_GAMMA)
    return sum(residuals) / len(residuals) if residuals else 0.0


def objective(
    state: ClusterState,
    weights: Weights = DEFAULT_WEIGHTS,
    gamma_table: GammaTable = DEFAULT_GAMMA,
    scope: AssuranceScope = AssuranceScope.RT_ONLY,
) -> ObjectiveBreakdown:
    """Full objective, recomputed from the job catalog (ignores cached loads)."""
    rt_flags, assurances, residuals = _scratch_terms(state, gamma_table)
    assigned = sum(len(n.jobs) for n in state.nodes.values())
    return combine(assigned, len(state.pending) + assigned, rt_flags, assurances, residuals, weights, scope)


class ObjectiveModel:
    """Objective evaluation over a state's cached loads, with what-if variants.

    Node terms are summed in node id order exactly as :func:`objective` does,
    so a what-if score equals the score of the materialized state bit for bit.
    """

    def __init__(
        self,
        weights: Weights = DEFAULT_WEIGHTS,
        gamma_table: GammaTable = DEFAULT_GAMMA,
        scope: AssuranceScope = AssuranceScope.RT_ONLY,
    ) -> None:
        self.weights = weights
        self.gamma_table = gamma_table
        self.scope = AssuranceScope(scope)

    def terms(self, state: ClusterState) -> tuple[list[bool], list[float], list[float]]:
        rt_flags, assurances, residuals = [], [], []
        g = self.gamma_table
        for nid in state.node_ids:
            node = state.nodes[nid]
            a, r = node_terms(node, state.loads[nid], g)
            rt_flags.append(node.rt)
            assurances.append(a)
            residuals.append(r)
        return rt_flags, assurances, residuals

    def evaluate(self, state: ClusterState, terms=None) -> ObjectiveBreakdown:
        rt_flags, assurances, residuals = terms if terms is not None else self.terms(state)
        return combine(
            len(state.assigned), state.m, rt_flags, assurances, residuals, self.weights, self.scope
        )

    def evaluate_with(
        self,
        state: ClusterState,
        terms,
        index: int,
        node_value: tuple[float, float],
        assigned_delta: int,
    ) -> ObjectiveBreakdown:
        """Score ``state`` with node ``index`` replaced by ``node_value`` and
        ``assigned_delta`` jobs moved from pending to assigned."""
        rt_flags, assurances, residuals = terms
        assurances = list(assurances)
        residuals = list(residuals)
        assurances[index], residuals[index] = node_value
        return combine(
            len(state.assigned) + assigned_delta,
            state.m,
            rt_flags,
            assurances,
            residuals,
            self.weights,
            self.scope,
        )
