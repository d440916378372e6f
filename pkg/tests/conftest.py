import random
from pathlib import Path

import pytest

from lrccache import BlockMeta, DagSpec, JobSpec
from lrccache.workloads import load_dag

FIXTURES = Path(__file__).parent / "fixtures"


def random_dag(rng: random.Random, max_blocks: int = 30, uniform: bool = False,
               n_jobs: int | None = None) -> DagSpec:
    """Random valid DAG: inputs first, then blocks with 1-3 earlier parents.

    Jobs are consecutive runs of the topological order, so every schedule
    in job order is deadlock-free.
    """
    n = rng.randint(3, max_blocks)
    n_in = rng.randint(1, min(4, n - 1))
    names = [f"b{i:02d}" for i in range(n)]
    blocks = [BlockMeta(b, 1 if uniform else rng.randint(1, 4), i < n_in)
              for i, b in enumerate(names)]
    edges = set()
    for i in range(n_in, n):
        for p in rng.sample(names[:i], rng.randint(1, min(3, i))):
            edges.add((p, names[i]))
    rest = names[n_in:]
    k = n_jobs if n_jobs is not None else rng.randint(1, min(5, len(rest)))
    cuts = sorted(rng.sample(range(1, len(rest)), k - 1)) if k > 1 else []
    jobs, start = [], 0
    for j, end in enumerate(cuts + [len(rest)]):
        jobs.append(JobSpec(f"job{j}", rest[start:end]))
        start = end
    return DagSpec(blocks, edges, jobs)


@pytest.fixture
def toy():
    return load_dag(FIXTURES / "toy_dag.json")


@pytest.fixture
def rng():
    return random.Random(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
