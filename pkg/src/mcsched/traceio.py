"""Trace files (JSON) and metrics files (CSV).

Trace layout, keys always in this order::

    {"version": 1, "seed": ..., "config": {...},
     "initial_nodes": [{"id", "capacity": {"cpu", "memory", "disk"}, "alpha", "beta", "rt"}],
     "events": [{"t", "seq", "kind", ...payload}]}

Payloads: ``node_add`` carries ``node``; ``job_arrival`` carries ``job``
(``{"id", "request", "limit", "criticality", "rt", "duration"}``, arrival time
is the event's ``t``); ``job_end`` carries ``job_id``.
"""

from __future__ import annotations

import hashlib
import io
import json
from typing import Iterable

import jsonschema

from .model import Criticality, Job, ResourceVector, WorkerNode
from .simulator import (
    ConfigError,
    Event,
    EventKind,
    EventTrace,
    GeneratorConfig,
    MetricsSeries,
    METRIC_FIELDS,
    TraceError,
)

TRACE_VERSION = 1

_VECTOR = {
    "type": "object",
    "required": ["cpu", "memory", "disk"],
    "additionalProperties": False,
    "properties": {k: {"type": "integer", "minimum": 0} for k in ("cpu", "memory", "disk")},
}
_NODE = {
    "type": "object",
    "required": ["id", "capacity", "alpha", "beta", "rt"],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "integer", "minimum": 0},
        "capacity": _VECTOR,
        "alpha": {"type": "number", "minimum": 0, "maximum": 0.5},
        "beta": {"type": "number", "minimum": 0, "maximum": 0.5},
        "rt": {"type": "boolean"},
    },
}
_JOB = {
    "type": "object",
    "required": ["id", "request", "limit", "criticality", "rt", "duration"],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "integer", "minimum": 0},
        "request": _VECTOR,
        "limit": _VECTOR,
        "criticality": {"enum": [c.name for c in Criticality]},
        "rt": {"type": "boolean"},
        "duration": {"type": "integer", "minimum": 1},
    },
}
_BASE_EVENT = {"t": {"type": "integer", "minimum": 0}, "seq": {"type": "integer", "minimum": 0}}
TRACE_SCHEMA = {
    "type": "object",
    "required": ["version", "seed", "config", "initial_nodes", "events"],
    "additionalProperties": False,
    "properties": {
        "version": {"type": "integer"},
        "seed": {"type": "integer"},
        "config": {"type": "object"},
        "initial_nodes": {"type": "array", "items": _NODE},
        "events": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["t", "seq", "kind"],
                "properties": {"kind": {"enum": [k.value for k in EventKind]}},
                "oneOf": [
                    {
                        "properties": {**_BASE_EVENT, "kind": {"const": "node_add"}, "node": _NODE},
                        "required": ["node"],
                        "additionalProperties": False,
                    },
                    {
                        "properties": {**_BASE_EVENT, "kind": {"const": "job_arrival"}, "job": _JOB},
                        "required": ["job"],
                        "additionalProperties": False,
                    },
                    {
                        "properties": {**_BASE_EVENT, "kind": {"const": "job_end"},
                                       "job_id": {"type": "integer", "minimum": 0}},
                        "required": ["job_id"],
                        "additionalProperties": False,
                    },
                ],
            },
        },
    },
}
_VALIDATOR = jsonschema.Draft202012Validator(TRACE_SCHEMA)


def _node_dict(node: WorkerNode) -> dict:
    return {"id": node.id, "capacity": node.capacity.to_dict(), "alpha": node.alpha, "beta": node.beta, "rt": node.rt}


def _job_dict(job: Job) -> dict:
    return {
        "id": job.id,
        "request": job.request.to_dict(),
        "limit": job.limit.to_dict(),
        "criticality": job.criticality.name,
        "rt": job.rt,
        "duration": job.duration,
    }


def _event_dict(ev: Event) -> dict:
    out = {"t": ev.time, "seq": ev.seq, "kind": ev.kind.value}
    if ev.kind is EventKind.NODE_ADD:
        out["node"] = _node_dict(ev.node)
    elif ev.kind is EventKind.JOB_ARRIVAL:
        out["job"] = _job_dict(ev.job)
    else:
        out["job_id"] = ev.job_id
    return out


def serialize_trace(trace: EventTrace) -> bytes:
    doc = {
        "version": trace.version,
        "seed": trace.seed,
        "config": trace.config.to_dict(),
        "initial_nodes": [_node_dict(n) for n in trace.initial_nodes],
        "events": [_event_dict(e) for e in trace.events],
    }
    # one event per line keeps traces diffable without blowing up their size
    lines = [
        "{",
        f'  "version": {json.dumps(doc["version"])},',
        f'  "seed": {json.dumps(doc["seed"])},',
        f'  "config": {json.dumps(doc["config"])},',
        '  "initial_nodes": [',
        ",\n".join("    " + json.dumps(n) for n in doc["initial_nodes"]),
        "  ],",
        '  "events": [',
        ",\n".join("    " + json.dumps(e) for e in doc["events"]),
        "  ]",
        "}",
    ]
    return ("\n".join(line for line in lines if line) + "\n").encode("utf-8")


def trace_sha256(trace: EventTrace) -> str:
    return hashlib.sha256(serialize_trace(trace)).hexdigest()


def _where(path: Iterable) -> str:
    path = list(path)
    if len(path) >= 2 and path[0] == "events":
        rest = "/".join(str(p) for p in path[2:])
        return f"event {path[1]}" + (f" ({rest})" if rest else "")
    return "/".join(str(p) for p in path) or "<root>"


def _vector(d: dict) -> ResourceVector:
    return ResourceVector(d["cpu"], d["memory"], d["disk"])


def _node(d: dict) -> WorkerNode:
    return WorkerNode(d["id"], _vector(d["capacity"]), float(d["alpha"]), float(d["beta"]), d["rt"])


def parse_trace(data: bytes | str) -> EventTrace:
    """Parse and validate a trace file; raises :class:`TraceError`."""
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise TraceError(f"not valid JSON: {exc}") from exc
    if isinstance(doc, dict) and doc.get("version") != TRACE_VERSION:
        raise TraceError(f"unsupported trace version {doc.get('version')!r}, expected {TRACE_VERSION}")
    error = jsonschema.exceptions.best_match(_VALIDATOR.iter_errors(doc))
    if error is not None:
        raise TraceError(f"schema violation at {_where(error.absolute_path)}: {error.message}")
    try:
        config = GeneratorConfig.from_dict(doc["config"])
    except ConfigError as exc:
        raise TraceError(f"config echo invalid: {exc}") from exc

    node_ids: set[int] = set()
    initial = []
    for i, nd in enumerate(doc["initial_nodes"]):
        try:
            node = _node(nd)
        except ValueError as exc:
            raise TraceError(f"initial node {i}: {exc}") from exc
        if node.id in node_ids:
            raise TraceError(f"initial node {i}: duplicate node id {node.id}")
        node_ids.add(node.id)
        initial.append(node)

    arrived: dict[int, int] = {}
    ended: set[int] = set()
    events = []
    last_t = 0
    for i, ed in enumerate(doc["events"]):
        where = f"event {i}"
        if ed["seq"] != i:
            raise TraceError(f"{where}: seq {ed['seq']} out of order")
        t = ed["t"]
        if t < last_t:
            raise TraceError(f"{where}: time {t} goes backwards (previous {last_t})")
        last_t = t
        kind = EventKind(ed["kind"])
        try:
            if kind is EventKind.NODE_ADD:
                node = _node(ed["node"])
                if node.id in node_ids:
                    raise TraceError(f"{where}: duplicate node id {node.id}")
                node_ids.add(node.id)
                events.append(Event(t, i, kind, node=node))
            elif kind is EventKind.JOB_ARRIVAL:
                jd = ed["job"]
                if jd["id"] in arrived:
                    raise TraceError(f"{where}: duplicate job id {jd['id']}")
                job = Job(jd["id"], _vector(jd["request"]), _vector(jd["limit"]),
                          Criticality[jd["criticality"]], jd["rt"], t, jd["duration"])
                arrived[job.id] = i
                events.append(Event(t, i, kind, job=job))
            else:
                jid = ed["job_id"]
                if jid not in arrived:
                    raise TraceError(f"{where}: job_end for job {jid} before its arrival")
                if jid in ended:
                    raise TraceError(f"{where}: job {jid} ends twice")
                ended.add(jid)
                events.append(Event(t, i, kind, job_id=jid))
        except TraceError:
            raise
        except ValueError as exc:
            raise TraceError(f"{where}: {exc}") from exc
    return EventTrace(seed=doc["seed"], config=config, initial_nodes=initial, events=events, version=doc["version"])


METRICS_HEADER = (
    "t", "seq", "event", "policy", *METRIC_FIELDS, "assigned", "pending", "nodes", "moves",
)


def _fmt(x: float) -> str:
    # Python's fixed-point formatting is correctly rounded, ties to even
    return format(x, ".6f")


def export_metrics(series: MetricsSeries, policy_label: str | None = None, trace_hash: str | None = None) -> bytes:
    label = policy_label if policy_label is not None else series.policy
    buf = io.StringIO()
    if trace_hash is not None:
        buf.write(f"# trace_sha256={trace_hash}\n")
    buf.write(",".join(METRICS_HEADER) + "\n")
    for s in series.samples:
        row = [str(s.time), str(s.seq), s.event, label]
        row += [_fmt(getattr(s, name)) for name in METRIC_FIELDS]
        row += [str(s.assigned), str(s.pending), str(s.nodes), str(s.moves)]
        buf.write(",".join(row) + "\n")
    return buf.getvalue().encode("utf-8")


SUMMARY_HEADER = ("policy", *METRIC_FIELDS, "moves", "samples")


def export_summary(series_by_policy: dict[str, MetricsSeries], trace_hash: str | None = None) -> bytes:
    """Time-averaged objective components, one row per policy."""
    buf = io.StringIO()
    if trace_hash is not None:
        buf.write(f"# trace_sha256={trace_hash}\n")
    buf.write(",".join(SUMMARY_HEADER) + "\n")
    for label, series in series_by_policy.items():
        avg = series.summary()
        moves = series.samples[-1].moves if series.samples else 0
        row = [label, *(_fmt(avg[name]) for name in METRIC_FIELDS), str(moves), str(len(series.samples))]
        buf.write(",".join(row) + "\n")
    return buf.getvalue().encode("utf-8")
