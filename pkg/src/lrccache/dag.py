"""Application DAGs of data blocks, reference counting and runnability."""
from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from .errors import ConsistencyError, InvalidArgumentError, SchemaError


@dataclass(frozen=True)
class BlockMeta:
    id: str
    size_bytes: int = 1
    is_input: bool = False


@dataclass(frozen=True)
class JobSpec:
    job_id: str
    target_blocks: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "target_blocks", tuple(self.target_blocks))


@dataclass(eq=False)
class DagSpec:
    """Blocks, parent->child edges and the ordered job partition.

    Edges are a set, so duplicate (parent, child) pairs collapse. Derived
    lookup tables (``parents``, ``children``, ``job_of``) are built once at
    construction; treat instances as immutable afterwards.
    """

    blocks: dict[str, BlockMeta]
    edges: frozenset[tuple[str, str]]
    jobs: tuple[JobSpec, ...]
    parents: dict[str, tuple[str, ...]] = field(init=False, repr=False)
    children: dict[str, tuple[str, ...]] = field(init=False, repr=False)
    job_of: dict[str, str] = field(init=False, repr=False)
    job_index: dict[str, int] = field(init=False, repr=False)

    def __init__(self, blocks: Iterable[BlockMeta], edges: Iterable[tuple[str, str]] = (),
                 jobs: Iterable[JobSpec] = ()):
        bmap: dict[str, BlockMeta] = {}
        for i, b in enumerate(blocks):
            if not isinstance(b.id, str) or not b.id:
                raise SchemaError(f"blocks[{i}]: id must be a non-empty string")
            if b.id in bmap:
                raise SchemaError(f"blocks[{i}]: duplicate id {b.id!r}")
            if not isinstance(b.size_bytes, int) or isinstance(b.size_bytes, bool) or b.size_bytes < 1:
                raise SchemaError(f"blocks[{i}] ({b.id!r}): size_bytes must be an integer >= 1")
            bmap[b.id] = b
        self.blocks = bmap
        self.edges = frozenset((str(p), str(c)) for p, c in edges)
        self.jobs = tuple(jobs)
        self._validate()

    def _validate(self):
        parents: dict[str, list[str]] = {b: [] for b in self.blocks}
        children: dict[str, list[str]] = {b: [] for b in self.blocks}
        for p, c in sorted(self.edges):
            for end in (p, c):
                if end not in self.blocks:
                    raise SchemaError(f"edge [{p!r}, {c!r}]: unknown block {end!r}")
            if p == c:
                raise SchemaError(f"edge [{p!r}, {c!r}]: self-loop")
            parents[c].append(p)
            children[p].append(c)
        for b, meta in self.blocks.items():
            if meta.is_input and parents[b]:
                raise SchemaError(f"input block {b!r} has parents {parents[b]}")

        job_of: dict[str, str] = {}
        job_index: dict[str, int] = {}
        for j, job in enumerate(self.jobs):
            if not job.job_id:
                raise SchemaError(f"jobs[{j}]: empty job_id")
            if job.job_id in job_index:
                raise SchemaError(f"jobs[{j}]: duplicate job_id {job.job_id!r}")
            job_index[job.job_id] = j
            for t in job.target_blocks:
                if t not in self.blocks:
                    raise SchemaError(f"jobs[{j}] ({job.job_id!r}): unknown target {t!r}")
                if self.blocks[t].is_input:
                    raise SchemaError(f"jobs[{j}] ({job.job_id!r}): target {t!r} is an input block")
                if t in job_of:
                    raise SchemaError(f"block {t!r} belongs to jobs {job_of[t]!r} and {job.job_id!r}")
                job_of[t] = job.job_id
        orphans = [b for b, m in self.blocks.items() if not m.is_input and b not in job_of]
        if orphans:
            raise SchemaError(f"non-input blocks outside every job: {sorted(orphans)}")

        # Kahn's algorithm for the cycle check.
        indeg = {b: len(ps) for b, ps in parents.items()}
        stack = [b for b, d in indeg.items() if d == 0]
        seen = 0
        while stack:
            b = stack.pop()
            seen += 1
            for c in children[b]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    stack.append(c)
        if seen != len(self.blocks):
            cyclic = sorted(b for b, d in indeg.items() if d > 0)
            raise SchemaError(f"cycle through blocks {cyclic}")

        self.parents = {b: tuple(ps) for b, ps in parents.items()}
        self.children = {b: tuple(cs) for b, cs in children.items()}
        self.job_of = job_of
        self.job_index = job_index

    def __eq__(self, other):
        if not isinstance(other, DagSpec):
            return NotImplemented
        return (self.blocks == other.blocks and self.edges == other.edges
                and self.jobs == other.jobs)

    def __len__(self):
        return len(self.blocks)

    @property
    def inputs(self) -> list[str]:
        return [b for b, m in self.blocks.items() if m.is_input]

    @property
    def total_bytes(self) -> int:
        return sum(m.size_bytes for m in self.blocks.values())

    def size(self, b: str) -> int:
        return self.blocks[b].size_bytes

    def job(self, job_id: str) -> JobSpec:
        return self.jobs[self.job_index[job_id]]

    def is_sink(self, b: str) -> bool:
        return not self.children[b]


class RefCountProfile:
    """Per-block count of not-yet-materialized children.

    Decrementing a zero entry raises :class:`ConsistencyError`; nothing is
    ever clamped.
    """

    __slots__ = ("counts",)

    def __init__(self, counts: Mapping[str, int] | None = None):
        self.counts: dict[str, int] = dict(counts or {})

    def __getitem__(self, b):
        return self.counts.get(b, 0)

    def __contains__(self, b):
        return b in self.counts

    def __iter__(self):
        return iter(self.counts)

    def __len__(self):
        return len(self.counts)

    def __eq__(self, other):
        if isinstance(other, RefCountProfile):
            other = other.counts
        if not isinstance(other, Mapping):
            return NotImplemented
        keys = set(self.counts) | set(other)
        return all(self.counts.get(k, 0) == other.get(k, 0) for k in keys)

    def __repr__(self):
        return f"RefCountProfile({self.counts!r})"

    def items(self):
        return self.counts.items()

    def copy(self) -> RefCountProfile:
        return RefCountProfile(self.counts)

    def set(self, b: str, value: int):
        if value < 0:
            raise InvalidArgumentError(f"negative reference count {value} for {b!r}")
        self.counts[b] = value

    def increment(self, b: str, by: int = 1):
        self.counts[b] = self.counts.get(b, 0) + by

    def decrement(self, b: str):
        cur = self.counts.get(b, 0)
        if cur <= 0:
            raise ConsistencyError(f"reference count of {b!r} would drop below zero")
        self.counts[b] = cur - 1


def _visible_set(dag: DagSpec, visible_jobs) -> set[str] | None:
    if visible_jobs is None:
        return None
    ids = {j.job_id if isinstance(j, JobSpec) else j for j in visible_jobs}
    unknown = ids - dag.job_index.keys()
    if unknown:
        raise InvalidArgumentError(f"unknown job ids {sorted(unknown)}")
    return ids


def compute_reference_counts(dag: DagSpec, visible_jobs=None,
                             materialized: Iterable[str] = ()) -> RefCountProfile:
    """Recount from scratch: children in visible jobs that are not materialized.

    ``visible_jobs=None`` means every job (offline mode).
    """
    mat = set(materialized)
    unknown = mat - dag.blocks.keys()
    if unknown:
        raise InvalidArgumentError(f"unknown blocks in materialized set: {sorted(unknown)}")
    vis = _visible_set(dag, visible_jobs)
    counts = dict.fromkeys(dag.blocks, 0)
    for p, c in dag.edges:
        if c in mat:
            continue
        if vis is not None and dag.job_of.get(c) not in vis:
            continue
        counts[p] += 1
    return RefCountProfile(counts)


def on_block_materialized(profile: RefCountProfile, dag: DagSpec, b: str,
                          visible_jobs=None) -> RefCountProfile:
    """Decrement each visible parent of ``b`` in place and return ``profile``."""
    if b not in dag.blocks:
        raise InvalidArgumentError(f"unknown block {b!r}")
    vis = _visible_set(dag, visible_jobs)
    if vis is not None and dag.job_of.get(b) not in vis:
        return profile
    for p in dag.parents[b]:
        profile.decrement(p)
    return profile


def runnable_blocks(dag: DagSpec, visible_jobs=None,
                    materialized: Iterable[str] = ()) -> list[str]:
    """Unmaterialized blocks of visible jobs whose parents are all materialized.

    Ordered by job submission order, then position in the job's target list.
    Input blocks are always treated as materialized.
    """
    mat = set(materialized) | set(dag.inputs)
    vis = _visible_set(dag, visible_jobs)
    out = []
    for job in dag.jobs:
        if vis is not None and job.job_id not in vis:
            continue
        for t in job.target_blocks:
            if t not in mat and all(p in mat for p in dag.parents[t]):
                out.append(t)
    return out


def reference_distances(dag: DagSpec, trace) -> tuple[list[int], float]:
    """Job-index gap between where each accessed block was produced and used.

    ``trace`` is an iterable of simulator events. Only ``access`` events
    count; accesses of input blocks are skipped. Returns the per-access
    distances and their mean (``nan`` when there are none).
    """
    out = []
    for ev in trace:
        if ev.kind != "access":
            continue
        src = dag.job_of.get(ev.block)
        if src is None:
            continue
        dest = dag.job_of[ev.task]
        out.append(dag.job_index[dest] - dag.job_index[src])
    mean = sum(out) / len(out) if out else float("nan")
    return out, mean
