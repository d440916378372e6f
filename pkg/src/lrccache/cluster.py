"""Driver/worker model of distributed reference-count maintenance.

A master keeps the global (online) reference-count profile and block
placement. Workers hold LRC caches and a local copy of the counts for their
resident blocks; they evict on their own. All communication goes through a
simulated network with FIFO delivery per (sender, receiver) pair; the driver
pumps the network to quiescence after every step, so a request and its
reply can never be overtaken by a later message.

Profile-update traffic (``UpdateReferenceCount``, ``DecrementReferenceCount``)
is sent only on job submission and, for replicated blocks, when a block is
consumed. A single host of an unreplicated block updates its count locally.
"""
from __future__ import annotations

import csv
import io
import zlib
from collections import Counter, deque
from collections.abc import Iterable
from dataclasses import dataclass, field

from .dag import DagSpec, JobSpec, RefCountProfile, compute_reference_counts
from .errors import (ConsistencyError, EvictionImpossibleError, InvalidArgumentError,
                     SchemaError, UncacheableError)
from .policies import Cache
from .simulator import execution_order

KINDS = ("ParseDag", "UpdateReferenceCount", "ReportRDDStatus", "GetReferenceCount",
         "DecrementReferenceCount", "EvictNotice")
PROFILE_UPDATES = ("UpdateReferenceCount", "DecrementReferenceCount")
MASTER = "master"
DRIVER = "driver"
LOG_HEADER = ("step", "from", "to", "kind", "block_or_job", "value")


@dataclass(frozen=True)
class Message:
    kind: str
    src: str
    dst: str
    key: str = ""  # block id, or job id for ParseDag
    value: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown message kind {self.kind!r}")


class Network:
    """In-order delivery with optional fault injection.

    One global FIFO is a valid (stricter) implementation of per-pair FIFO.
    """

    def __init__(self):
        self.queue: deque[Message] = deque()
        self.handlers: dict[str, object] = {}
        self.delivered: Counter = Counter()
        self.dropped: list[Message] = []
        self.log: list[tuple] = []
        self._drop_rules: list[list] = []

    def register(self, name: str, handler):
        self.handlers[name] = handler

    def send(self, msg: Message):
        self.queue.append(msg)

    def drop_next(self, kind: str, count: int = 1, key: str | None = None):
        """Silently lose the next ``count`` messages of ``kind`` (optionally for one block)."""
        self._drop_rules.append([kind, key, count])

    def _should_drop(self, msg: Message) -> bool:
        for rule in self._drop_rules:
            kind, key, left = rule
            if left > 0 and msg.kind == kind and (key is None or key == msg.key):
                rule[2] -= 1
                return True
        return False

    def pump(self) -> int:
        n = 0
        while self.queue:
            msg = self.queue.popleft()
            if self._should_drop(msg):
                self.dropped.append(msg)
                continue
            self.log.append((len(self.log), msg.src, msg.dst, msg.kind, msg.key,
                             "" if msg.value is None else msg.value))
            self.delivered[msg.kind] += 1
            n += 1
            handler = self.handlers.get(msg.dst)
            if handler is not None:
                handler.handle(msg)
        return n

    @property
    def in_flight(self) -> int:
        return len(self.queue)

    def profile_update_count(self) -> int:
        return sum(self.delivered[k] for k in PROFILE_UPDATES)

    def log_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_HEADER)
        w.writerows(self.log)
        return buf.getvalue()


def placement_of(block: str, n_workers: int, replication: int = 1) -> list[str]:
    """Hosts for ``block``: crc32(id) mod W, then the next replication-1 workers."""
    h = zlib.crc32(block.encode("utf-8")) % n_workers
    return [f"w{(h + i) % n_workers}" for i in range(min(replication, n_workers))]


class MasterState:
    """Global profile, seen job ids, placement and message counters."""

    def __init__(self, net: Network, n_workers: int, replication: int = 1):
        self.net = net
        self.n_workers = n_workers
        self.replication = replication
        self.blocks: dict[str, int] = {}  # sizes of blocks seen in fragments
        self.edges: set[tuple[str, str]] = set()
        self.job_of: dict[str, str] = {}
        self.jobs: dict[str, JobSpec] = {}
        self.global_profile = RefCountProfile()
        self.seen_job_ids: set[str] = set()
        self.materialized: set[str] = set()
        self.placement: dict[str, set[str]] = {}
        net.register(MASTER, self)

    @property
    def message_counters(self) -> Counter:
        return self.net.delivered

    def _send(self, kind, dst, key="", value=None):
        self.net.send(Message(kind, MASTER, dst, key, value))

    def _push_updates(self, changed: Iterable[str]):
        for b in sorted(set(changed)):
            for w in sorted(self.placement.get(b, ())):
                self._send("UpdateReferenceCount", w, b, self.global_profile[b])

    def submit_job(self, job: JobSpec, edges: Iterable[tuple[str, str]],
                   sizes: dict[str, int] | None = None):
        """Merge a job's DAG fragment and push the count changes to block hosts.

        ``edges`` must be exactly the parent edges of the job's targets. A
        job id seen before is a re-execution: its targets count as not yet
        computed again and the whole profile is recomputed from scratch.
        """
        edges = {(str(p), str(c)) for p, c in edges}
        targets = set(job.target_blocks)
        bad = [e for e in edges if e[1] not in targets or e[0] == e[1]]
        if bad:
            raise SchemaError(f"job {job.job_id!r}: fragment edges {sorted(bad)} end outside the job")
        for t in targets:
            other = self.job_of.get(t)
            if other is not None and other != job.job_id:
                raise SchemaError(f"job {job.job_id!r}: block {t!r} already belongs to {other!r}")
        if job.job_id in self.seen_job_ids and self.jobs[job.job_id].target_blocks != job.target_blocks:
            raise SchemaError(f"job {job.job_id!r} resubmitted with different targets")

        self.net.send(Message("ParseDag", DRIVER, MASTER, job.job_id, len(edges)))
        if sizes:
            self.blocks.update(sizes)

        if job.job_id not in self.seen_job_ids:
            self.seen_job_ids.add(job.job_id)
            self.jobs[job.job_id] = job
            for t in targets:
                self.job_of[t] = job.job_id
            new = edges - self.edges
            self.edges |= new
            changed = []
            for p, c in sorted(new):
                if c not in self.materialized:
                    self.global_profile.increment(p)
                    changed.append(p)
            self._push_updates(changed)
            return

        # re-execution: recount over the visible fragment without the redone targets
        self.materialized -= targets
        self.edges |= edges
        before = dict(self.global_profile.items())
        fresh = self._recount()
        self.global_profile = fresh
        changed = [b for b in set(before) | set(fresh) if before.get(b, 0) != fresh[b]]
        self._push_updates(changed)

    def _recount(self) -> RefCountProfile:
        names = set(self.blocks) | {x for e in self.edges for x in e}
        counts = dict.fromkeys(names, 0)
        for p, c in self.edges:
            if c not in self.materialized:
                counts[p] += 1
        return RefCountProfile(counts)

    def handle(self, msg: Message):
        if msg.kind == "GetReferenceCount":
            self._send("GetReferenceCount", msg.src, msg.key, self.global_profile[msg.key])
        elif msg.kind == "ReportRDDStatus":
            status, detail = msg.value
            if status == "resident":
                self.placement.setdefault(msg.key, set()).add(msg.src)
            elif status == "consumed":
                # detail: consuming child; the reporting host already decremented locally
                self.global_profile.decrement(msg.key)
                for w in sorted(self.placement.get(msg.key, ())):
                    if w != msg.src:
                        self._send("DecrementReferenceCount", w, msg.key, detail)
            elif status == "materialized":
                self.materialized.add(msg.key)
        elif msg.kind == "EvictNotice":
            hosts = self.placement.get(msg.key)
            if hosts is not None:
                hosts.discard(msg.src)
                if not hosts:
                    del self.placement[msg.key]


class WorkerState:
    """One worker: a local LRC cache plus its local view of the counts."""

    def __init__(self, worker_id: str, net: Network, capacity_bytes: int):
        self.worker_id = worker_id
        self.net = net
        self.cache = Cache("lrc-online", capacity_bytes)
        self.local_profile: dict[str, int] = {}
        self.hits = 0
        self.misses = 0
        net.register(worker_id, self)

    def _send(self, kind, key="", value=None):
        self.net.send(Message(kind, self.worker_id, MASTER, key, value))

    def _set(self, b, v):
        self.local_profile[b] = v
        self.cache.sync_profile({b: v})

    def handle(self, msg: Message):
        if msg.kind in ("UpdateReferenceCount", "GetReferenceCount"):
            if msg.key in self.cache:
                self._set(msg.key, int(msg.value))
        elif msg.kind == "DecrementReferenceCount":
            if msg.key in self.cache:
                self.decrement(msg.key)

    def decrement(self, b: str):
        cur = self.local_profile.get(b, 0)
        if cur <= 0:
            raise ConsistencyError(f"{self.worker_id}: count of {b!r} would drop below zero")
        self._set(b, cur - 1)

    def insert(self, b: str, size: int) -> bool:
        """Cache ``b``, fetching its count from the master when unknown."""
        try:
            decision = self.cache.insert(b, size)
        except (UncacheableError, EvictionImpossibleError):
            return False
        if decision is not None:
            for v in decision.victims:
                self.local_profile.pop(v, None)
                self._send("EvictNotice", v, "evicted")
        if b not in self.local_profile:
            self.local_profile[b] = 0
            self._send("GetReferenceCount", b)
        self._send("ReportRDDStatus", b, ("resident", ""))
        return True


def access_block(worker: WorkerState, master: MasterState, b: str, consuming_child: str):
    """Record that ``consuming_child`` has consumed ``b`` on ``worker``.

    The worker decrements its own copy and reports to the master, which
    relays the decrement to any other hosts of ``b``.
    """
    if b in worker.cache:
        worker.decrement(b)
    worker._send("ReportRDDStatus", b, ("consumed", consuming_child))


def quiesce_check(master: MasterState, workers: Iterable[WorkerState]) -> tuple[bool, list[tuple[str, str, int, int]]]:
    """True when every resident block's local count matches the master's.

    Also returns the divergent (worker, block, local, global) entries.
    """
    if master.net.in_flight:
        raise InvalidArgumentError("messages still in flight")
    bad = []
    for w in workers:
        for b in sorted(w.cache.resident):
            local = w.local_profile.get(b)
            if local != master.global_profile[b]:
                bad.append((w.worker_id, b, local, master.global_profile[b]))
    return not bad, bad


@dataclass
class ClusterReport:
    hits: int = 0
    misses: int = 0
    counters: Counter = field(default_factory=Counter)
    consistent_after_each_job: list[bool] = field(default_factory=list)

    @property
    def hit_ratio(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 1.0


class Cluster:
    """Executes a DagSpec on W workers through the message protocol.

    Tasks run serially in the same order as the single-cache simulator. A
    parent is read from the first host that has it resident; on a miss it
    is reloaded at its primary host. New blocks go to all their placement
    hosts.
    """

    def __init__(self, dag: DagSpec, n_workers: int, capacity_per_worker: int,
                 replication: int = 1):
        if n_workers < 1:
            raise InvalidArgumentError("need at least one worker")
        if not 1 <= replication <= n_workers:
            raise InvalidArgumentError("replication must be between 1 and the worker count")
        self.dag = dag
        self.net = Network()
        self.master = MasterState(self.net, n_workers, replication)
        self.workers = {f"w{i}": WorkerState(f"w{i}", self.net, capacity_per_worker)
                        for i in range(n_workers)}
        self.replication = replication
        self.report = ClusterReport(counters=self.net.delivered)
        self._preloaded = False
        self._order = dict(execution_order(dag, [j.job_id for j in dag.jobs]))

    def hosts(self, b: str) -> list[str]:
        return placement_of(b, len(self.workers), self.replication)

    def fragment(self, job_id: str) -> list[tuple[str, str]]:
        job = self.dag.job(job_id)
        return [(p, t) for t in job.target_blocks for p in self.dag.parents[t]]

    def submit(self, job_id: str):
        job = self.dag.job(job_id)
        frag = self.fragment(job_id)
        sizes = {x: self.dag.size(x) for e in frag for x in e}
        self.master.submit_job(job, frag, sizes)
        self.net.pump()
        if not self._preloaded:
            self._preloaded = True
            for b in sorted(self.dag.inputs):
                self._place(b)
            for b in sorted(self.dag.inputs):
                self.master.materialized.add(b)

    def _place(self, b: str):
        for w in self.hosts(b):
            if b not in self.workers[w].cache:
                self.workers[w].insert(b, self.dag.size(b))
        self.net.pump()

    def run_task(self, t: str):
        used = []
        for p in sorted(self.dag.parents[t]):
            host = next((w for w in self.hosts(p) if p in self.workers[w].cache), None)
            if host is not None:
                self.report.hits += 1
                self.workers[host].hits += 1
            else:
                self.report.misses += 1
                host = self.hosts(p)[0]
                self.workers[host].misses += 1
                self.workers[host].insert(p, self.dag.size(p))
                self.net.pump()
            wk = self.workers[host]
            if p in wk.cache:
                wk.cache.record_access(p)
                wk.cache.pin(p)
            used.append((wk, p))
        for wk, p in used:
            access_block(wk, self.master, p, t)
            wk.cache.unpin(p)
        self.net.pump()
        self.workers[self.hosts(t)[0]]._send("ReportRDDStatus", t, ("materialized", ""))
        self.net.pump()
        self._place(t)

    def run_job(self, job_id: str):
        for t in self._order[job_id]:
            self.run_task(t)

    def run(self) -> ClusterReport:
        for job in self.dag.jobs:
            self.submit(job.job_id)
            self.run_job(job.job_id)
            ok, _ = quiesce_check(self.master, self.workers.values())
            self.report.consistent_after_each_job.append(ok)
        return self.report

    def quiesce_check(self):
        return quiesce_check(self.master, self.workers.values())

    def expected_profile(self) -> RefCountProfile:
        """Independent recount over the submitted jobs and materialized blocks."""
        return compute_reference_counts(self.dag, self.master.seen_job_ids,
                                        self.master.materialized)
