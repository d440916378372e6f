"""Synthetic benchmark-shaped DAGs, the JSON DAG file format, tenant composition."""
from __future__ import annotations

import json
import random
from collections.abc import Sequence
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .dag import BlockMeta, DagSpec, JobSpec
from .errors import InvalidArgumentError, SchemaError

FAMILIES = ("iterative", "pregel_like", "layered_random")


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs for :func:`generate`.

    ``iterations`` doubles as the layer count for ``layered_random``. With
    ``static_block_reuse`` there is one long-lived input partition per stage
    slot (think of a partitioned link table); block j of every iteration reads
    partition j, so each partition is referenced once per iteration.
    ``static_size_factor`` scales those partitions' sizes relative to the
    per-iteration blocks. ``skip_edges`` adds, from the third stage on, one
    parent two jobs back, which produces reference distances of 2.
    """

    family: str = "iterative"
    iterations: int = 10
    blocks_per_stage: int = 8
    fan_in: int = 2
    static_block_reuse: bool = True
    seed: int = 0
    size_min: int = 1
    size_max: int = 4
    skip_edges: bool = False
    static_size_factor: int = 3

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidArgumentError(f"family must be one of {FAMILIES}, not {self.family!r}")
        if self.iterations < 1 or self.blocks_per_stage < 1:
            raise InvalidArgumentError("iterations and blocks_per_stage must be >= 1 (empty layer)")
        if not 1 <= self.fan_in <= self.blocks_per_stage:
            raise InvalidArgumentError("fan_in must be between 1 and blocks_per_stage")
        if not 1 <= self.size_min <= self.size_max:
            raise InvalidArgumentError("need 1 <= size_min <= size_max")
        if self.static_size_factor < 1:
            raise InvalidArgumentError("static_size_factor must be >= 1")

    @classmethod
    def from_json(cls, text: str) -> GeneratorParams:
        doc = json.loads(text)
        known = {f.name for f in fields(cls)}
        extra = set(doc) - known
        if extra:
            raise InvalidArgumentError(f"unknown generator fields {sorted(extra)}")
        return cls(**doc)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


class _Builder:
    def __init__(self, params: GeneratorParams):
        self.p = params
        self.rng = random.Random(params.seed)
        self.blocks: list[BlockMeta] = []
        self.edges: list[tuple[str, str]] = []
        self.jobs: list[JobSpec] = []

    def block(self, name: str, is_input: bool = False, scale: int = 1) -> str:
        size = self.rng.randint(self.p.size_min, self.p.size_max) * scale
        self.blocks.append(BlockMeta(name, size, is_input))
        return name

    def statics(self) -> list[str] | None:
        if not self.p.static_block_reuse:
            return None
        return [self.block(f"static/p{j:03d}", True, self.p.static_size_factor)
                for j in range(self.p.blocks_per_stage)]

    def stage(self, names: Sequence[str]) -> list[str]:
        return [self.block(n) for n in names]

    def link(self, child: str, parents: Sequence[str]):
        self.edges.extend((p, child) for p in parents)

    def build(self) -> DagSpec:
        return DagSpec(self.blocks, self.edges, self.jobs)


def _iterative(b: _Builder) -> None:
    p = b.p
    k = p.blocks_per_stage
    static = b.statics()
    stages = [[b.block(f"in/b{j:03d}", True) for j in range(k)]]
    for i in range(1, p.iterations + 1):
        cur = b.stage([f"it{i:03d}/b{j:03d}" for j in range(k)])
        for j, c in enumerate(cur):
            b.link(c, b.rng.sample(stages[-1], p.fan_in))
            if static:
                b.link(c, [static[j]])
            if p.skip_edges and len(stages) >= 2:
                b.link(c, [b.rng.choice(stages[-2])])
        b.jobs.append(JobSpec(f"iter-{i:03d}", cur))
        stages.append(cur)


def _pregel_like(b: _Builder) -> None:
    p = b.p
    k = p.blocks_per_stage
    graph = b.statics()
    states = [[b.block(f"in/v{j:03d}", True) for j in range(k)]]
    for i in range(1, p.iterations + 1):
        msgs = b.stage([f"s{i:03d}/msg{j:03d}" for j in range(k)])
        for j, m in enumerate(msgs):
            b.link(m, b.rng.sample(states[-1], p.fan_in))
            if graph:
                b.link(m, [graph[j]])
            if p.skip_edges and len(states) >= 2:
                b.link(m, [b.rng.choice(states[-2])])
        verts = b.stage([f"s{i:03d}/v{j:03d}" for j in range(k)])
        for j, v in enumerate(verts):
            b.link(v, [states[-1][j]] + b.rng.sample(msgs, p.fan_in))
        b.jobs.append(JobSpec(f"step-{i:03d}", msgs + verts))
        states.append(verts)


def _layered_random(b: _Builder) -> None:
    p = b.p
    k = p.blocks_per_stage
    static = b.statics()
    layers = [[b.block(f"in/b{j:03d}", True) for j in range(k)]]
    for i in range(1, p.iterations + 1):
        cur = b.stage([f"l{i:03d}/b{j:03d}" for j in range(k)])
        for j, c in enumerate(cur):
            b.link(c, b.rng.sample(layers[-1], b.rng.randint(1, p.fan_in)))
            if static:
                b.link(c, [static[j]])
            if p.skip_edges and len(layers) >= 2:
                b.link(c, [b.rng.choice(layers[-2])])
        b.jobs.append(JobSpec(f"layer-{i:03d}", cur))
        layers.append(cur)


_FAMILY_FN = {"iterative": _iterative, "pregel_like": _pregel_like,
              "layered_random": _layered_random}


def generate(params: GeneratorParams) -> DagSpec:
    """Deterministic DAG for ``params``; one job per iteration/layer."""
    b = _Builder(params)
    _FAMILY_FN[params.family](b)
    return b.build()


# file format -----------------------------------------------------------

_TOP = {"blocks", "edges", "jobs"}
_BLOCK_KEYS = {"id", "size_bytes", "is_input"}
_JOB_KEYS = {"job_id", "targets"}


def dag_to_json(dag: DagSpec) -> str:
    doc = {
        "blocks": [{"id": m.id, "size_bytes": m.size_bytes, "is_input": m.is_input}
                   for m in dag.blocks.values()],
        "edges": [list(e) for e in sorted(dag.edges)],
        "jobs": [{"job_id": j.job_id, "targets": list(j.target_blocks)} for j in dag.jobs],
    }
    return json.dumps(doc, indent=1, ensure_ascii=False) + "\n"


def _expect(cond, where, msg):
    if not cond:
        raise SchemaError(f"{where}: {msg}")


def dag_from_json(text: str) -> DagSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    _expect(isinstance(doc, dict), "document", "top level must be an object")
    _expect(set(doc) == _TOP, "document",
            f"keys must be exactly {sorted(_TOP)}, got {sorted(doc)}")
    _expect(isinstance(doc["blocks"], list), "blocks", "must be a list")
    _expect(isinstance(doc["edges"], list), "edges", "must be a list")
    _expect(isinstance(doc["jobs"], list), "jobs", "must be a list")

    blocks = []
    for i, b in enumerate(doc["blocks"]):
        where = f"blocks[{i}]"
        _expect(isinstance(b, dict), where, "must be an object")
        _expect(set(b) <= _BLOCK_KEYS, where, f"unknown fields {sorted(set(b) - _BLOCK_KEYS)}")
        _expect("id" in b and "size_bytes" in b, where, "id and size_bytes are required")
        _expect(isinstance(b["id"], str), where + ".id", "must be a string")
        size = b["size_bytes"]
        _expect(isinstance(size, int) and not isinstance(size, bool), where + ".size_bytes",
                "must be an integer")
        is_input = b.get("is_input", False)
        _expect(isinstance(is_input, bool), where + ".is_input", "must be a boolean")
        blocks.append(BlockMeta(b["id"], size, is_input))

    edges = []
    for i, e in enumerate(doc["edges"]):
        _expect(isinstance(e, list) and len(e) == 2 and all(isinstance(x, str) for x in e),
                f"edges[{i}]", "must be a [parent, child] pair of strings")
        edges.append((e[0], e[1]))

    jobs = []
    for i, j in enumerate(doc["jobs"]):
        where = f"jobs[{i}]"
        _expect(isinstance(j, dict), where, "must be an object")
        _expect(set(j) == _JOB_KEYS, where, f"keys must be exactly {sorted(_JOB_KEYS)}")
        _expect(isinstance(j["job_id"], str), where + ".job_id", "must be a string")
        _expect(isinstance(j["targets"], list) and all(isinstance(t, str) for t in j["targets"]),
                where + ".targets", "must be a list of strings")
        jobs.append(JobSpec(j["job_id"], j["targets"]))

    return DagSpec(blocks, edges, jobs)


def save_dag(dag: DagSpec, path) -> None:
    Path(path).write_text(dag_to_json(dag), encoding="utf-8", newline="\n")


def load_dag(path) -> DagSpec:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return dag_from_json(text)
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from None


# tenants ---------------------------------------------------------------


def _renamed(dag: DagSpec, f) -> DagSpec:
    return DagSpec(
        [BlockMeta(f(m.id), m.size_bytes, m.is_input) for m in dag.blocks.values()],
        [(f(p), f(c)) for p, c in dag.edges],
        [JobSpec(f(j.job_id), [f(t) for t in j.target_blocks]) for j in dag.jobs],
    )


def compose_tenants(dags: Sequence[DagSpec], prefixes: Sequence[str] | None = None) -> list[DagSpec]:
    """Namespace each tenant's block and job ids with its prefix.

    Default prefixes are ``t01/``, ``t02/``, ... in tenant order.
    """
    if prefixes is None:
        prefixes = [f"t{i + 1:02d}/" for i in range(len(dags))]
    if len(prefixes) != len(dags):
        raise InvalidArgumentError("need exactly one prefix per tenant")
    if len(set(prefixes)) != len(prefixes):
        raise InvalidArgumentError("duplicate tenant prefix")
    for a in prefixes:
        if not a:
            raise InvalidArgumentError("empty tenant prefix")
        for b in prefixes:
            if a != b and b.startswith(a):
                raise InvalidArgumentError(f"prefix {a!r} is a prefix of {b!r}")
    return [_renamed(d, lambda x, pre=pre: pre + x) for d, pre in zip(dags, prefixes)]


def split_tenant(dag: DagSpec, prefix: str) -> DagSpec:
    """Inverse of :func:`compose_tenants` for one tenant."""
    for x in list(dag.blocks) + [j.job_id for j in dag.jobs]:
        if not x.startswith(prefix):
            raise InvalidArgumentError(f"id {x!r} lacks prefix {prefix!r}")
    return _renamed(dag, lambda x: x[len(prefix):])
