"""Domain types for the mixed-criticality orchestration model."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator

N_DIMS = 3
DIM_NAMES = ("cpu", "memory", "disk")


@dataclass(frozen=True, slots=True)
class ResourceVector:
    """CPU in millicores, memory and disk in MiB."""

    cpu: int = 0
    memory: int = 0
    disk: int = 0

    def __post_init__(self) -> None:
        for name in DIM_NAMES:
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise TypeError(f"{name} must be an int, got {value!r}")
            if value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")

    @classmethod
    def of(cls, values) -> ResourceVector:
        cpu, memory, disk = values
        return cls(int(cpu), int(memory), int(disk))

    def __iter__(self) -> Iterator[int]:
        yield self.cpu
        yield self.memory
        yield self.disk

    def __getitem__(self, z: int) -> int:
        return (self.cpu, self.memory, self.disk)[z]

    def __len__(self) -> int:
        return N_DIMS

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.cpu, self.memory, self.disk)

    def __add__(self, other: ResourceVector) -> ResourceVector:
        return ResourceVector(self.cpu + other.cpu, self.memory + other.memory, self.disk + other.disk)

    def __sub__(self, other: ResourceVector) -> ResourceVector:
        # raises ValueError if any component goes negative
        return ResourceVector(self.cpu - other.cpu, self.memory - other.memory, self.disk - other.disk)

    def sub_clamped(self, other: ResourceVector) -> ResourceVector:
        return ResourceVector(*(max(0, a - b) for a, b in zip(self, other)))

    def fits_in(self, other: ResourceVector) -> bool:
        return self.cpu <= other.cpu and self.memory <= other.memory and self.disk <= other.disk

    def to_dict(self) -> dict[str, int]:
        return {"cpu": self.cpu, "memory": self.memory, "disk": self.disk}


ZERO = ResourceVector()


class Criticality(IntEnum):
    NO = 0
    LOW = 1
    HIGH = 2


@dataclass(frozen=True, slots=True)
class Job:
    id: int
    request: ResourceVector
    limit: ResourceVector
    criticality: Criticality
    rt: bool
    arrival_time: int = 0
    duration: int = 1

    def __post_init__(self) -> None:
        if not self.request.fits_in(self.limit):
            raise ValueError(f"job {self.id}: limit must be >= request component-wise")
        if not any(self.request):
            raise ValueError(f"job {self.id}: request needs a strictly positive component")
        if self.arrival_time < 0:
            raise ValueError(f"job {self.id}: arrival_time must be >= 0")
        if self.duration < 1:
            raise ValueError(f"job {self.id}: duration must be >= 1")
        object.__setattr__(self, "criticality", Criticality(self.criticality))


@dataclass(slots=True)
class WorkerNode:
    id: int
    capacity: ResourceVector
    alpha: float
    beta: float
    rt: bool
    jobs: set[int] = field(default_factory=set)

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 0.5:
            raise ValueError(f"node {self.id}: alpha must lie in [0, 0.5], got {self.alpha}")
        if not 0.0 <= self.beta <= 0.5:
            raise ValueError(f"node {self.id}: beta must lie in [0, 0.5], got {self.beta}")
        if not all(self.capacity):
            raise ValueError(f"node {self.id}: capacity must be strictly positive in every dimension")

    @property
    def base_assurance(self) -> float:
        return self.alpha + self.beta


@dataclass(frozen=True, slots=True)
class Thresholds:
    theta_low: float = 0.5
    theta_high: float = 0.75

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta_low < self.theta_high <= 1.0:
            raise ValueError(
                f"thresholds need 0 <= theta_low < theta_high <= 1, got {self.theta_low}, {self.theta_high}"
            )


def _sum_vectors(vectors) -> list[int]:
    total = [0, 0, 0]
    for v in vectors:
        total[0] += v.cpu
        total[1] += v.memory
        total[2] += v.disk
    return total


def free_at_request(node: WorkerNode, catalog: dict[int, Job]) -> ResourceVector:
    """Capacity left after subtracting the requests of every hosted job."""
    used = _sum_vectors(catalog[j].request for j in node.jobs)
    free = [c - u for c, u in zip(node.capacity, used)]
    assert min(free) >= 0, f"node {node.id} violates request-level fit"
    return ResourceVector(*free)


def free_at_limit(node: WorkerNode, catalog: dict[int, Job]) -> ResourceVector:
    """Capacity left after subtracting hosted limits, clamped at zero per dimension."""
    used = _sum_vectors(catalog[j].limit for j in node.jobs)
    return ResourceVector(*(max(0, c - u) for c, u in zip(node.capacity, used)))


class NodeLoad:
    """Per-criticality request and limit totals of one node.

    Kept alongside the node so eligibility and what-if scoring never walk the
    job catalog. All sums are integers, hence exact.
    """

    __slots__ = ("req", "lim", "count")

    def __init__(self) -> None:
        self.req = [[0, 0, 0] for _ in Criticality]
        self.lim = [[0, 0, 0] for _ in Criticality]
        self.count = [0, 0, 0]

    @classmethod
    def from_jobs(cls, jobs) -> NodeLoad:
        load = cls()
        for job in jobs:
            load.add(job)
        return load

    def add(self, job: Job) -> None:
        c = job.criticality
        r, l = self.req[c], self.lim[c]
        r[0] += job.request.cpu
        r[1] += job.request.memory
        r[2] += job.request.disk
        l[0] += job.limit.cpu
        l[1] += job.limit.memory
        l[2] += job.limit.disk
        self.count[c] += 1

    def remove(self, job: Job) -> None:
        c = job.criticality
        r, l = self.req[c], self.lim[c]
        r[0] -= job.request.cpu
        r[1] -= job.request.memory
        r[2] -= job.request.disk
        l[0] -= job.limit.cpu
        l[1] -= job.limit.memory
        l[2] -= job.limit.disk
        self.count[c] -= 1

    def request_total(self) -> list[int]:
        r = self.req
        return [r[0][z] + r[1][z] + r[2][z] for z in range(N_DIMS)]

    def limit_total(self) -> list[int]:
        l = self.lim
        return [l[0][z] + l[1][z] + l[2][z] for z in range(N_DIMS)]

    def max_criticality(self) -> Criticality | None:
        for c in (Criticality.HIGH, Criticality.LOW, Criticality.NO):
            if self.count[c]:
                return c
        return None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NodeLoad):
            return NotImplemented
        return self.req == other.req and self.lim == other.lim and self.count == other.count

    def __repr__(self) -> str:
        return f"NodeLoad(req={self.req}, lim={self.lim}, count={self.count})"


class StateError(RuntimeError):
    """An operation would break a ClusterState invariant."""


class ClusterState:
    """Nodes plus the pending/assigned job ledgers.

    ``nodes`` iterates in ascending id order as long as ids are added in
    increasing order, which the trace generator guarantees; ``node_ids`` is
    sorted regardless.
    """

    def __init__(self) -> None:
        self.nodes: dict[int, WorkerNode] = {}
        self.loads: dict[int, NodeLoad] = {}
        self.assigned: dict[int, int] = {}
        self.pending: set[int] = set()
        self.jobs_catalog: dict[int, Job] = {}
        self.finished: set[int] = set()
        self.clock: int = 0
        self._node_order: list[int] = []

    @property
    def node_ids(self) -> list[int]:
        return self._node_order

    @property
    def m(self) -> int:
        return len(self.pending) + len(self.assigned)

    def add_node(self, node: WorkerNode) -> None:
        if node.id in self.nodes:
            raise StateError(f"duplicate node id {node.id}")
        node = WorkerNode(node.id, node.capacity, node.alpha, node.beta, node.rt, set())
        self.nodes[node.id] = node
        self.loads[node.id] = NodeLoad()
        self._node_order = sorted(self.nodes)

    def add_pending(self, job: Job) -> None:
        if job.id in self.jobs_catalog:
            raise StateError(f"duplicate job id {job.id}")
        self.jobs_catalog[job.id] = job
        self.pending.add(job.id)

    def assign(self, job_id: int, node_id: int) -> None:
        if job_id not in self.pending:
            raise StateError(f"job {job_id} is not pending")
        job = self.jobs_catalog[job_id]
        node = self.nodes[node_id]
        load = self.loads[node_id]
        used = load.request_total()
        if any(u + r > c for u, r, c in zip(used, job.request, node.capacity)):
            raise StateError(f"job {job_id} does not fit node {node_id} at request level")
        self.pending.discard(job_id)
        self.assigned[job_id] = node_id
        node.jobs.add(job_id)
        load.add(job)

    def unassign(self, job_id: int) -> int:
        """Move an assigned job back to pending; returns its former node id."""
        node_id = self.assigned.pop(job_id)
        self.nodes[node_id].jobs.discard(job_id)
        self.loads[node_id].remove(self.jobs_catalog[job_id])
        self.pending.add(job_id)
        return node_id

    def finish(self, job_id: int) -> None:
        if job_id in self.assigned:
            self.unassign(job_id)
        if job_id not in self.pending:
            raise StateError(f"job {job_id} is not live")
        self.pending.discard(job_id)
        self.finished.add(job_id)

    def pending_in_arrival_order(self) -> list[int]:
        cat = self.jobs_catalog
        return sorted(self.pending, key=lambda j: (cat[j].arrival_time, j))

    def copy(self) -> ClusterState:
        return copy.deepcopy(self)

    def check_invariants(self) -> None:
        """Raise StateError on any ledger inconsistency or request overcommit."""
        if self.pending & self.assigned.keys():
            raise StateError("pending and assigned overlap")
        if self.finished & (self.pending | self.assigned.keys()):
            raise StateError("finished job still live")
        inverse: dict[int, set[int]] = {nid: set() for nid in self.nodes}
        for j, nid in self.assigned.items():
            inverse[nid].add(j)
        for nid, node in self.nodes.items():
            if node.jobs != inverse[nid]:
                raise StateError(f"node {nid} job set disagrees with assignment map")
            expected = NodeLoad.from_jobs(self.jobs_catalog[j] for j in node.jobs)
            if expected != self.loads[nid]:
                raise StateError(f"node {nid} cached load is stale")
            used = expected.request_total()
            if any(u > c for u, c in zip(used, node.capacity)):
                raise StateError(f"node {nid} request sum exceeds capacity")
