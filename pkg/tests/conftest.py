from __future__ import annotations

import numpy as np
import pytest

from mcsched.assurance import assurance_if_assigned, threshold_of
from mcsched.model import ClusterState, Criticality, Job, ResourceVector, WorkerNode, free_at_request
from mcsched.objectives import objective


def vec(*values: int) -> ResourceVector:
    if len(values) == 1:
        values = values * 3
    return ResourceVector(*values)


def make_job(jid: int, req, lim=None, crit=Criticality.NO, rt=False, t=0, duration=10) -> Job:
    req = req if isinstance(req, ResourceVector) else vec(*np.atleast_1d(req).tolist())
    lim = req if lim is None else lim if isinstance(lim, ResourceVector) else vec(*np.atleast_1d(lim).tolist())
    return Job(jid, req, lim, crit, rt, t, duration)


def make_node(nid: int, cap=1000, alpha=0.5, beta=0.5, rt=True) -> WorkerNode:
    cap = cap if isinstance(cap, ResourceVector) else vec(*np.atleast_1d(cap).tolist())
    return WorkerNode(nid, cap, alpha, beta, rt)


def state_with(nodes, placed=(), pending=()) -> ClusterState:
    """Build a state from nodes, (job, node_id) placements and pending jobs."""
    state = ClusterState()
    for n in nodes:
        state.add_node(n)
    for job, nid in placed:
        state.add_pending(job)
        state.assign(job.id, nid)
    for job in pending:
        state.add_pending(job)
    return state


def random_job(rng: np.random.Generator, jid: int, req_hi: int = 600) -> Job:
    req = [int(x) for x in rng.integers(1, req_hi, size=3)]
    lim = [r + int(rng.integers(0, req_hi)) for r in req]
    crit = Criticality(int(rng.integers(0, 3)))
    return Job(jid, ResourceVector(*req), ResourceVector(*lim), crit, bool(rng.random() < 0.4), jid, 1)


def random_node(rng: np.random.Generator, nid: int, cap_lo: int = 500, cap_hi: int = 3000) -> WorkerNode:
    cap = ResourceVector.of(rng.integers(cap_lo, cap_hi, size=3))
    return WorkerNode(nid, cap, float(rng.uniform(0, 0.5)), float(rng.uniform(0, 0.5)), bool(rng.random() < 0.6))


def random_state(rng: np.random.Generator, max_nodes: int = 6, max_jobs: int = 20) -> ClusterState:
    """Random valid state: jobs are placed at random where they fit at request level."""
    state = ClusterState()
    for nid in range(int(rng.integers(0, max_nodes + 1))):
        state.add_node(random_node(rng, nid))
    for jid in range(int(rng.integers(0, max_jobs + 1))):
        job = random_job(rng, jid)
        state.add_pending(job)
        ids = list(state.node_ids)
        rng.shuffle(ids)
        if rng.random() < 0.8:
            for nid in ids:
                used = state.loads[nid].request_total()
                if all(u + r <= c for u, r, c in zip(used, job.request, state.nodes[nid].capacity)):
                    state.assign(jid, nid)
                    break
    return state


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def oracle_eligible(state: ClusterState, node_id: int, job: Job, thresholds, gamma_table) -> bool:
    """Eligibility recomputed from the catalog, without cached loads."""
    node, cat = state.nodes[node_id], state.jobs_catalog
    if job.rt and not node.rt:
        return False
    if not job.request.fits_in(free_at_request(node, cat)):
        return False
    a_star = assurance_if_assigned(node, job, cat, gamma_table)
    hosted = [cat[k].criticality for k in node.jobs] + [job.criticality]
    return all(a_star >= threshold_of(c, thresholds) for c in hosted)


def oracle_k4s(state: ClusterState, job: Job, weights, thresholds, gamma_table, exclude=()) -> int | None:
    """Enumerate every eligible placement plus leave-pending; best objective wins.

    Ties go to the lowest node id, and a placement beats leave-pending on ties.
    """
    stay = objective(state, weights, gamma_table).score
    best = None
    for nid in sorted(state.nodes):
        if nid in exclude or not oracle_eligible(state, nid, job, thresholds, gamma_table):
            continue
        trial = state.copy()
        trial.assign(job.id, nid)
        score = objective(trial, weights, gamma_table).score
        if best is None or score > best[0]:
            best = (score, nid)
    if best is not None and best[0] >= stay:
        return best[1]
    return None


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion (plus optional detail lines)."""

    def _report(criterion: str, passed: bool, detail: str = "", extra: list[str] | None = None) -> bool:
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
        ACCEPTANCE_LINES.extend("       " + line for line in extra or [])
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
