import dataclasses

import pytest

from conftest import make_job, make_node
from mcsched.scheduling import Policy, RebalanceTrigger, Scheduler
from mcsched.simulator import (
    ConfigError,
    Event,
    EventKind,
    EventTrace,
    GeneratorConfig,
    MetricsSample,
    MetricsSeries,
    TraceError,
    generate_trace,
    run,
)
from mcsched.traceio import parse_trace, serialize_trace

SMALL = GeneratorConfig(initial_nodes=(2, 3), job_count=(30, 60), horizon=100, node_additions=(1, 2), mean_duration=20)


def test_generation_is_deterministic():
    a = serialize_trace(generate_trace(GeneratorConfig(), 7))
    b = serialize_trace(generate_trace(GeneratorConfig(), 7))
    assert a == b
    assert a != serialize_trace(generate_trace(GeneratorConfig(), 8))


@pytest.mark.parametrize("seed", range(25))
def test_default_ranges(seed):
    trace = generate_trace(GeneratorConfig(), seed)
    arrivals = [e for e in trace.events if e.kind is EventKind.JOB_ARRIVAL]
    adds = [e for e in trace.events if e.kind is EventKind.NODE_ADD]
    assert 4 <= len(trace.initial_nodes) <= 10
    assert 300 <= len(arrivals) <= 1000
    assert 0 <= len(adds) <= 5
    for e in arrivals:
        assert e.job.request.fits_in(e.job.limit)
        assert e.job.duration >= 1
        assert 0 <= e.time < 1000
        assert all(50 <= r <= 500 for r in e.job.request)
    for node in trace.initial_nodes + [e.node for e in adds]:
        assert all(2000 <= c <= 8000 for c in node.capacity)
        lo = 0.35 if node.rt else 0.2
        assert lo <= node.alpha <= 0.5 and lo <= node.beta <= 0.5


def test_trace_ordering():
    trace = generate_trace(SMALL, 3)
    arrived = {}
    for i, e in enumerate(trace.events):
        assert e.seq == i
        if i:
            assert e.time >= trace.events[i - 1].time
        if e.kind is EventKind.JOB_ARRIVAL:
            arrived[e.job.id] = e
        elif e.kind is EventKind.JOB_END:
            start = arrived[e.job_id]
            assert e.time == start.time + start.job.duration
    ids = [n.id for n in trace.initial_nodes] + [e.node.id for e in trace.events if e.node]
    assert ids == list(range(len(ids)))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"initial_nodes": (5, 4)},
        {"job_count": (-1, 3)},
        {"criticality_probs": (0.5, 0.5, 0.5)},
        {"rt_given_criticality": (0.1, 1.5, 0.2)},
        {"limit_factor": (0.5, 2.0)},
        {"alpha_beta_rt": (0.1, 0.6)},
        {"horizon": 0},
        {"mean_duration": 0.5},
    ],
)
def test_generator_config_rejects_invalid(kwargs):
    with pytest.raises(ConfigError):
        GeneratorConfig(**kwargs)


def test_generator_config_dict_roundtrip_and_unknown_keys():
    cfg = GeneratorConfig(job_count=(10, 20))
    assert GeneratorConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError, match="unknown"):
        GeneratorConfig.from_dict({"jobs": 3})


def _trace(initial, events):
    return EventTrace(seed=0, config=GeneratorConfig(), initial_nodes=initial, events=events)


def test_empty_trace_single_sample():
    series = run(_trace([make_node(0), make_node(1)], []), Scheduler())
    assert len(series.samples) == 1
    s = series.samples[0]
    assert (s.event, s.acceptance, s.residual, s.nodes) == ("init", 1.0, 1.0, 2)


def test_one_node_one_job():
    job = make_job(0, 100, 500, t=1, duration=4)
    trace = _trace([make_node(0)], [Event(1, 0, EventKind.JOB_ARRIVAL, job=job), Event(5, 1, EventKind.JOB_END, job_id=0)])
    for policy in Policy:
        series = run(trace, Scheduler(policy=policy))
        init, arrive, end = series.samples
        assert arrive.acceptance == 1.0 and arrive.assigned == 1
        assert arrive.residual == 0.25
        assert end.residual == init.residual == 1.0
        assert (end.assigned, end.pending, end.finished) == (0, 0, 1)


def test_job_end_for_pending_job():
    job = make_job(0, 5000, t=0, duration=3)
    trace = _trace([make_node(0)], [Event(0, 0, EventKind.JOB_ARRIVAL, job=job), Event(3, 1, EventKind.JOB_END, job_id=0)])
    series = run(trace, Scheduler())
    assert series.samples[1].pending == 1 and series.samples[1].acceptance == 0.0
    assert series.samples[2].pending == 0 and series.samples[2].acceptance == 1.0


def test_node_add_rescues_pending_rt_job():
    job = make_job(0, 100, rt=True, t=0, duration=50)
    events = [Event(0, 0, EventKind.JOB_ARRIVAL, job=job), Event(2, 1, EventKind.NODE_ADD, node=make_node(1, rt=True))]
    series = run(_trace([make_node(0, rt=False)], events), Scheduler(policy=Policy.LEAST_ALLOCATED))
    assert series.samples[1].pending == 1
    assert series.samples[2].assigned == 1


def test_run_rejects_unknown_job_end():
    trace = _trace([make_node(0)], [Event(0, 0, EventKind.JOB_END, job_id=42)])
    with pytest.raises(TraceError, match="event 0"):
        run(trace, Scheduler())


def test_run_rejects_duplicate_arrival():
    job = make_job(0, 10)
    trace = _trace([make_node(0)], [Event(0, 0, EventKind.JOB_ARRIVAL, job=job), Event(1, 1, EventKind.JOB_ARRIVAL, job=job)])
    with pytest.raises(TraceError, match="event 1"):
        run(trace, Scheduler())


@pytest.mark.parametrize("policy", list(Policy))
def test_replay_is_deterministic_and_conserves_jobs(policy):
    trace = generate_trace(SMALL, 11)
    replayed = parse_trace(serialize_trace(trace))
    a = run(trace, Scheduler(policy=policy))
    b = run(replayed, Scheduler(policy=policy))
    assert a == b
    assert len(a.samples) == len(trace.events) + 1
    for s in a.samples:
        assert s.assigned + s.pending + s.finished == s.arrivals
        for name in ("acceptance", "assurance", "residual", "weighted_sum", "score"):
            assert 0.0 <= getattr(s, name) <= 1.0


def test_policies_share_event_timeline():
    trace = generate_trace(SMALL, 5)
    timelines = {
        p: [(s.time, s.event) for s in run(trace, Scheduler(policy=p)).samples] for p in Policy
    }
    assert len(set(map(tuple, timelines.values()))) == 1


def test_run_does_not_mutate_trace():
    trace = generate_trace(SMALL, 2)
    before = serialize_trace(trace)
    run(trace, Scheduler())
    assert serialize_trace(trace) == before


def test_observer_sees_every_event_and_state_invariants():
    trace = generate_trace(SMALL, 4)
    seen = []

    def watch(state, event):
        state.check_invariants()
        seen.append(None if event is None else event.seq)

    run(trace, Scheduler(), observer=watch)
    assert seen == [None] + list(range(len(trace.events)))


def test_rebalance_triggers():
    trace = generate_trace(SMALL, 9)
    never = run(trace, Scheduler(rebalance_on=RebalanceTrigger.NEVER))
    assert never.samples[-1].moves == 0
    every = run(trace, Scheduler(rebalance_on=RebalanceTrigger.EVERY_EVENT))
    moves = every.column("moves")
    assert moves == sorted(moves)
    baseline = run(trace, Scheduler(policy=Policy.MOST_ALLOCATED, rebalance_on=RebalanceTrigger.EVERY_EVENT))
    assert baseline.samples[-1].moves == 0


def _sample(t, value):
    return MetricsSample(t, 0, "x", value, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0)


def test_time_average_is_piecewise_constant():
    series = MetricsSeries("p", [_sample(0, 1.0), _sample(0, 0.5), _sample(2, 0.0), _sample(3, 1.0), _sample(6, 0.2)])
    # 0.5 over [0,2), 0.0 over [2,3), 1.0 over [3,6) -> (1 + 0 + 3) / 6
    assert series.time_average("acceptance") == pytest.approx(4 / 6)
    single = MetricsSeries("p", [_sample(0, 1.0), _sample(0, 0.5)])
    assert single.time_average("acceptance") == 0.75
    assert series.summary()["acceptance"] == series.time_average("acceptance")
