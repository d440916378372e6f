"""Deterministic execution of a DagSpec against one cache.

Jobs run serially in schedule order. Inside a job the next task is always
the runnable target with the smallest position in the job's target list.
Per task the parents are read in lexicographic order (hit: pin; miss: pay
the reload cost, insert, pin). On materialization the parents' reference
counts drop, the parents are unpinned, then the new block is inserted.
Inputs are preloaded in lexicographic order right after the first job is
submitted.
"""
from __future__ import annotations

import csv
import heapq
import io
import random
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dag import DagSpec, RefCountProfile, compute_reference_counts, on_block_materialized
from .errors import (DeadlockError, EvictionImpossibleError, InvalidArgumentError,
                     UncacheableError)
from .policies import POLICIES, REFCOUNT_POLICIES, Cache, EvictionLog

REPORT_HEADER = ("policy", "capacity_bytes", "hits", "misses", "hit_ratio", "runtime")
TRACE_HEADER = ("step", "kind", "block", "task", "job", "detail")
INACTIVE_HEADER = ("tasks_completed", "inactive_fraction")
RANK_HEADER = ("access_index", "recency_pct", "frequency_pct", "refcount_pct")
DISTANCE_HEADER = ("access_index", "block", "task", "distance")


@dataclass(frozen=True)
class CostModel:
    hit_cost: float = 1
    miss_cost: float = 25
    compute_cost: float = 5

    def __post_init__(self):
        if min(self.hit_cost, self.miss_cost, self.compute_cost) < 0:
            raise InvalidArgumentError("costs must be non-negative")
        if self.miss_cost < self.hit_cost:
            raise InvalidArgumentError("miss_cost must be >= hit_cost")


@dataclass(frozen=True)
class Event:
    """One trace entry.

    kind is one of ``submit``, ``task_start``, ``access``, ``materialize``,
    ``insert``, ``evict``, ``bypass``. ``detail`` carries hit/miss for
    accesses, the insert reason (preload/reload/materialize), or the
    policy key of an evicted block.
    """

    step: int
    kind: str
    block: str = ""
    task: str = ""
    job: str = ""
    detail: str = ""


@dataclass
class SimReport:
    policy: str
    capacity_bytes: int
    mode: str
    dag: DagSpec = field(repr=False)
    cost: CostModel
    hits: int = 0
    misses: int = 0
    materializations: int = 0
    trace: list[Event] = field(default_factory=list, repr=False)
    eviction_log: EvictionLog = field(default_factory=EvictionLog, repr=False)
    per_tenant: dict[str, tuple[int, int]] = field(default_factory=dict)
    _inactive: list | None = field(default=None, repr=False)
    _ranks: list | None = field(default=None, repr=False)

    @property
    def hit_ratio(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 1.0

    @property
    def runtime(self):
        c = self.cost
        return self.hits * c.hit_cost + self.misses * c.miss_cost + self.materializations * c.compute_cost

    @property
    def evictions(self) -> int:
        return sum(1 for r in self.eviction_log if r[2] == "evict")

    @property
    def inactive_fraction_series(self) -> list[tuple[int, float]]:
        if self._inactive is None:
            self._inactive = measure_inactive_fraction(self.trace, self.dag)
        return self._inactive

    @property
    def rank_percentile_log(self) -> list[tuple[int, float, float, float]]:
        if self._ranks is None:
            self._ranks = measure_rank_percentiles(self.trace, self.dag)
        return self._ranks

    def row(self) -> tuple:
        return (self.policy, self.capacity_bytes, self.hits, self.misses,
                self.hit_ratio, self.runtime)

    def fingerprint(self) -> tuple:
        """Everything observable about the run except the policy/mode labels."""
        return (self.capacity_bytes, self.hits, self.misses, self.runtime,
                tuple(self.trace), tuple(r[:1] + r[2:] for r in self.eviction_log),
                tuple(sorted(self.per_tenant.items())))


def execution_order(dag: DagSpec, schedule: Sequence[str]) -> list[tuple[str, list[str]]]:
    """Task order per job for a serial job schedule; raises on deadlock."""
    materialized = set(dag.inputs)
    out = []
    for job_id in schedule:
        job = dag.job(job_id)
        pos = {t: i for i, t in enumerate(job.target_blocks)}
        pending = {}
        heap = []
        for t in job.target_blocks:
            n = sum(1 for p in dag.parents[t] if p not in materialized)
            pending[t] = n
            if n == 0:
                heap.append(pos[t])
        heapq.heapify(heap)
        order = []
        while heap:
            t = job.target_blocks[heapq.heappop(heap)]
            order.append(t)
            materialized.add(t)
            for c in dag.children[t]:
                if c in pending:
                    pending[c] -= 1
                    if pending[c] == 0:
                        heapq.heappush(heap, pos[c])
        if len(order) != len(job.target_blocks):
            raise DeadlockError([t for t in job.target_blocks if t not in materialized])
        out.append((job_id, order))
    return out


def _access_sequence(dag: DagSpec, order) -> list[str]:
    seq = []
    for _, tasks in order:
        for t in tasks:
            seq.extend(sorted(dag.parents[t]))
    return seq


def _execute(dag: DagSpec, schedule: Sequence[str], policy: str, capacity_bytes: int,
             cost: CostModel, online: bool, tenant_of=None) -> SimReport:
    if policy not in POLICIES:
        raise InvalidArgumentError(f"unknown policy {policy!r}; choose from {POLICIES}")
    order = execution_order(dag, schedule)
    refcounting = policy in REFCOUNT_POLICIES
    mode = "online" if online else "offline"

    if online:
        profile = RefCountProfile(dict.fromkeys(dag.blocks, 0))
    else:
        profile = compute_reference_counts(dag)
    future = _access_sequence(dag, order) if policy == "min" else None
    log = EvictionLog()
    cache = Cache(policy, capacity_bytes, future=future, log=log,
                  profile=profile.counts if refcounting else None)
    rep = SimReport(policy, capacity_bytes, mode, dag, cost, eviction_log=log)
    trace = rep.trace
    tenant_stats: dict[str, list[int]] = {}

    step = 0

    def emit(kind, block="", task="", job="", detail=""):
        nonlocal step
        trace.append(Event(step, kind, block, task, job, str(detail)))
        step += 1

    def put(b, reason, task="", job=""):
        cache.step = step
        n_before = len(log)
        try:
            cache.insert(b, dag.size(b))
        except (UncacheableError, EvictionImpossibleError) as exc:
            emit("bypass", b, task, job, "uncacheable" if isinstance(exc, UncacheableError) else "no-room")
            return False
        for r in log.rows[n_before:]:
            if r[2] == "evict":
                emit("evict", r[3], task, job, r[4])
        emit("insert", b, task, job, reason)
        return True

    def preload():
        for b in sorted(dag.inputs):
            put(b, "preload")

    if not order:
        preload()

    for i, (job_id, tasks) in enumerate(order):
        emit("submit", job=job_id)
        if online:
            touched = {}
            for t in dag.job(job_id).target_blocks:
                for p in dag.parents[t]:
                    profile.increment(p)
                    touched[p] = profile[p]
            if refcounting:
                cache.sync_profile(touched)
        if i == 0:
            preload()
        for t in tasks:
            emit("task_start", t, t, job_id)
            parents = sorted(dag.parents[t])
            for p in parents:
                if p in cache:
                    rep.hits += 1
                    outcome = "hit"
                    emit("access", p, t, job_id, "hit")
                else:
                    rep.misses += 1
                    outcome = "miss"
                    emit("access", p, t, job_id, "miss")
                    put(p, "reload", t, job_id)
                cache.record_access(p, outcome == "hit")
                if p in cache:
                    cache.pin(p)
                if tenant_of is not None:
                    st = tenant_stats.setdefault(tenant_of[t], [0, 0])
                    st[0 if outcome == "hit" else 1] += 1
            emit("materialize", t, t, job_id)
            rep.materializations += 1
            on_block_materialized(profile, dag, t)
            if refcounting:
                cache.sync_profile({p: profile[p] for p in parents})
            for p in parents:
                cache.unpin(p)
            put(t, "materialize", t, job_id)

    if tenant_of is not None:
        names = sorted(set(tenant_of.values()))
        rep.per_tenant = {n: tuple(tenant_stats.get(n, (0, 0))) for n in names}
    return rep


def capacity_from_fraction(total_bytes: int, fraction: float) -> int:
    """Byte capacity for a fraction of the total data (floor, at least 1)."""
    if not 0 < fraction <= 1:
        raise InvalidArgumentError(f"capacity fraction must be in (0, 1], got {fraction}")
    return max(1, int(fraction * total_bytes))


def _resolve_mode(policy: str, mode: str) -> bool:
    if mode not in ("offline", "online"):
        raise InvalidArgumentError(f"mode must be offline or online, not {mode!r}")
    if policy == "min" and mode == "online":
        raise InvalidArgumentError("min is an offline oracle; online mode is not allowed")
    return mode == "online" or policy == "lrc-online"


def run(dag: DagSpec, policy: str, capacity_bytes: int, cost: CostModel | None = None,
        mode: str = "offline") -> SimReport:
    """Execute every job of ``dag`` in order under one policy.

    ``lrc`` with ``mode="online"`` behaves as LRC-Online; ``lrc-online`` is
    always online. The mode has no effect on LRU and LFU.
    """
    online = _resolve_mode(policy, mode)
    return _execute(dag, [j.job_id for j in dag.jobs], policy, int(capacity_bytes),
                    cost or CostModel(), online)


def merge_tenants(dags: Sequence[DagSpec]) -> tuple[DagSpec, dict[str, str]]:
    """Union of namespaced tenant DAGs plus a block -> tenant-index map."""
    blocks, edges, jobs = [], set(), []
    owner: dict[str, str] = {}
    job_owner: dict[str, int] = {}
    for i, d in enumerate(dags):
        for b, meta in d.blocks.items():
            if b in owner:
                raise InvalidArgumentError(f"block id {b!r} appears in tenants {owner[b]} and {i}")
            owner[b] = str(i)
            blocks.append(meta)
        for job in d.jobs:
            if job.job_id in job_owner:
                raise InvalidArgumentError(
                    f"job id {job.job_id!r} appears in tenants {job_owner[job.job_id]} and {i}")
            job_owner[job.job_id] = i
            jobs.append(job)
        edges |= d.edges
    return DagSpec(blocks, edges, jobs), owner


def interleave_jobs(dags: Sequence[DagSpec], seed: int) -> list[str]:
    """Round-robin over tenants; each cycle's tenant order is shuffled by ``seed``."""
    rng = random.Random(seed)
    queues = [[j.job_id for j in d.jobs] for d in dags]
    cursor = [0] * len(dags)
    out = []
    while True:
        live = [i for i in range(len(dags)) if cursor[i] < len(queues[i])]
        if not live:
            return out
        rng.shuffle(live)
        for i in live:
            out.append(queues[i][cursor[i]])
            cursor[i] += 1


def run_multi_tenant(dags: Sequence[DagSpec], policy: str, capacity_bytes: int,
                     cost: CostModel | None = None, interleave_seed: int = 0) -> SimReport:
    """All tenants share one cache; reference counts are always online."""
    if not dags:
        raise InvalidArgumentError("need at least one tenant")
    if policy == "min":
        raise InvalidArgumentError("min is not available for multi-tenant runs")
    merged, owner = merge_tenants(dags)
    schedule = interleave_jobs(dags, interleave_seed)
    return _execute(merged, schedule, policy, int(capacity_bytes), cost or CostModel(),
                    online=True, tenant_of=owner)


# metrics ---------------------------------------------------------------


def _samples_at(trace):
    """Yield (event, sample_now) where sample_now marks the end of a materialization step."""
    pending = False
    for ev in trace:
        if pending and ev.kind in ("task_start", "submit"):
            yield None, True
            pending = False
        yield ev, False
        if ev.kind == "materialize":
            pending = True
    if pending:
        yield None, True


def measure_inactive_fraction(trace, dag: DagSpec) -> list[tuple[int, float]]:
    """Fraction of resident bytes with zero whole-DAG reference count.

    Sampled once per completed task, after the new block's insert and any
    evictions it caused. Blocks without children are final outputs and
    count as active.
    """
    profile = compute_reference_counts(dag)
    resident: dict[str, int] = {}
    done = 0
    out = []
    for ev, sample in _samples_at(trace):
        if sample:
            total = sum(resident.values())
            dead = sum(sz for b, sz in resident.items()
                       if profile[b] == 0 and not dag.is_sink(b))
            out.append((done, dead / total if total else 0.0))
            continue
        if ev.kind == "insert":
            resident[ev.block] = dag.size(ev.block)
        elif ev.kind == "evict":
            resident.pop(ev.block, None)
        elif ev.kind == "materialize":
            on_block_materialized(profile, dag, ev.block)
            done += 1
    return out


def measure_rank_percentiles(trace, dag: DagSpec) -> list[tuple[int, float, float, float]]:
    """Percentile rank of each accessed block under recency, frequency and refcount.

    Candidates are all materialized blocks that still have an unmaterialized
    child. 100 means most cache-worthy; ties share their mid-rank.
    """
    ids = list(dag.blocks)
    slot = {b: i for i, b in enumerate(ids)}
    n = len(ids)
    last = np.zeros(n, dtype=np.int64)
    freq = np.zeros(n, dtype=np.int64)
    rc = np.zeros(n, dtype=np.int64)
    alive = np.zeros(max(n, 1), dtype=np.int64)
    alive_pos: dict[int, int] = {}

    def add(s):
        alive[len(alive_pos)] = s
        alive_pos[s] = len(alive_pos)

    def drop(s):
        pos = alive_pos.pop(s)
        end = len(alive_pos)
        if pos != end:
            moved = int(alive[end])
            alive[pos] = moved
            alive_pos[moved] = pos

    profile = compute_reference_counts(dag)
    for b, c in profile.items():
        rc[slot[b]] = c
    for b in sorted(dag.inputs):
        if rc[slot[b]] > 0:
            add(slot[b])

    out = []
    k = 0
    for ev in trace:
        if ev.kind == "insert" and ev.detail == "preload":
            last[slot[ev.block]] = ev.step
        elif ev.kind == "access":
            s = slot[ev.block]
            m = len(alive_pos)
            out.append((k,
                        kernels.midrank_percentile(last, alive, m, last[s]),
                        kernels.midrank_percentile(freq, alive, m, freq[s]),
                        kernels.midrank_percentile(rc, alive, m, rc[s])))
            k += 1
            last[s] = ev.step
            freq[s] += 1
        elif ev.kind == "materialize":
            c = ev.block
            for p in dag.parents[c]:
                sp = slot[p]
                rc[sp] -= 1
                if rc[sp] == 0 and sp in alive_pos:
                    drop(sp)
            s = slot[c]
            last[s] = ev.step
            if rc[s] > 0:
                add(s)
    return out


# CSV I/O ---------------------------------------------------------------


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def report_csv(reports) -> str:
    return _csv(REPORT_HEADER, [r.row() for r in reports])


def trace_csv(trace) -> str:
    return _csv(TRACE_HEADER, [(e.step, e.kind, e.block, e.task, e.job, e.detail) for e in trace])


def inactive_csv(series) -> str:
    return _csv(INACTIVE_HEADER, series)


def rank_csv(log) -> str:
    return _csv(RANK_HEADER, log)


def distance_csv(trace, dag: DagSpec) -> str:
    """Per-access reference distance; input blocks are skipped."""
    rows = []
    k = 0
    for ev in trace:
        if ev.kind != "access":
            continue
        src = dag.job_of.get(ev.block)
        if src is not None:
            rows.append((k, ev.block, ev.task,
                         dag.job_index[dag.job_of[ev.task]] - dag.job_index[src]))
        k += 1
    return _csv(DISTANCE_HEADER, rows)


def read_trace(text: str) -> list[Event]:
    rows = csv.DictReader(io.StringIO(text))
    if tuple(rows.fieldnames or ()) != TRACE_HEADER:
        raise InvalidArgumentError(f"trace header must be {','.join(TRACE_HEADER)}")
    return [Event(int(r["step"]), r["kind"], r["block"], r["task"], r["job"], r["detail"])
            for r in rows]
