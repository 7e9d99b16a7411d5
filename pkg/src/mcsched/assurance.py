"""Load-dependent node assurance.

A node's assurance is its static hardware/software base (alpha + beta) scaled
by a load factor gamma. Gamma is looked up from the node's guarantee tier: the
lowest criticality class whose jobs can all run at their limits while every
less critical job is held to its request.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from .model import Criticality, Job, NodeLoad, Thresholds, WorkerNode


class GuaranteeTier(IntEnum):
    ALL_LIMITS = 0
    LOW_LIMITS = 1
    HIGH_LIMITS = 2
    REQUESTS_ONLY = 3


_TIER_BY_CRITICALITY = (GuaranteeTier.ALL_LIMITS, GuaranteeTier.LOW_LIMITS, GuaranteeTier.HIGH_LIMITS)


@dataclass(frozen=True, slots=True)
class GammaTable:
    all_limits: float = 1.0
    low_limits: float = 0.85
    high_limits: float = 0.7
    requests_only: float = 0.5

    def __post_init__(self) -> None:
        values = self.as_tuple()
        if self.all_limits != 1.0:
            raise ValueError("gamma at ALL_LIMITS must be 1.0")
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ValueError(f"gamma values must lie in [0, 1], got {values}")
        if any(a < b for a, b in zip(values, values[1:])):
            raise ValueError(f"gamma must be non-increasing along the tier order, got {values}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.all_limits, self.low_limits, self.high_limits, self.requests_only)

    def __getitem__(self, tier: GuaranteeTier) -> float:
        return self.as_tuple()[tier]


DEFAULT_GAMMA = GammaTable()


def tier_from_load(capacity, load: NodeLoad, extra: Job | None = None) -> GuaranteeTier:
    """Tier of a node with the given load, optionally plus one more job.

    ``extra`` lets what-if evaluation skip copying the load.
    """
    req, lim = load.req, load.lim
    if extra is not None:
        ec = extra.criticality
        ereq = extra.request.as_tuple()
        elim = extra.limit.as_tuple()
    for c in (0, 1, 2):
        ok = True
        for z in (0, 1, 2):
            total = 0
            for k in (0, 1, 2):
                total += lim[k][z] if k >= c else req[k][z]
            if extra is not None:
                total += elim[z] if ec >= c else ereq[z]
            if total > capacity[z]:
                ok = False
                break
        if ok:
            return _TIER_BY_CRITICALITY[c]
    return GuaranteeTier.REQUESTS_ONLY


def guaranteed_tier(node: WorkerNode, catalog: dict[int, Job]) -> GuaranteeTier:
    load = NodeLoad.from_jobs(catalog[j] for j in node.jobs)
    return tier_from_load(node.capacity.as_tuple(), load)


def assurance(node: WorkerNode, catalog: dict[int, Job], gamma_table: GammaTable = DEFAULT_GAMMA) -> float:
    return node.base_assurance * gamma_table[guaranteed_tier(node, catalog)]


def assurance_if_assigned(
    node: WorkerNode, job: Job, catalog: dict[int, Job], gamma_table: GammaTable = DEFAULT_GAMMA
) -> float:
    """Assurance the node would have with ``job`` added. Does not mutate ``node``."""
    load = NodeLoad.from_jobs(catalog[j] for j in node.jobs if j != job.id)
    return node.base_assurance * gamma_table[tier_from_load(node.capacity.as_tuple(), load, job)]


def threshold_of(criticality: Criticality, thresholds: Thresholds) -> float:
    if criticality == Criticality.HIGH:
        return thresholds.theta_high
    if criticality == Criticality.LOW:
        return thresholds.theta_low
    return 0.0
