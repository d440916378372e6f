import math

import pytest

from lrccache import (BlockMeta, DagSpec, JobSpec, RefCountProfile, compute_reference_counts,
                      on_block_materialized, reference_distances, run, runnable_blocks)
from lrccache.errors import ConsistencyError, InvalidArgumentError, SchemaError


def test_toy_counts(toy):
    assert len(toy) == 6 and len(toy.edges) == 5
    assert compute_reference_counts(toy) == {"A": 1, "B": 1, "C": 1, "D": 2, "E": 0, "F": 0}


def test_online_counts_only_see_submitted_jobs(toy):
    prof = compute_reference_counts(toy, ["j1", "j2"])
    assert prof["D"] == 1 and prof["C"] == 0
    assert compute_reference_counts(toy, ["j1", "j2", "j3"])["D"] == 2


def test_incremental_matches_recount(toy):
    prof = compute_reference_counts(toy)
    for i, b in enumerate(["D", "E", "F"]):
        on_block_materialized(prof, toy, b)
        assert prof == compute_reference_counts(toy, materialized=["D", "E", "F"][: i + 1])


def test_decrement_below_zero_raises(toy):
    prof = compute_reference_counts(toy, materialized=["D"])
    with pytest.raises(ConsistencyError):
        on_block_materialized(prof, toy, "D")
    with pytest.raises(ConsistencyError):
        RefCountProfile().decrement("x")


def test_unknown_materialized_block(toy):
    with pytest.raises(InvalidArgumentError):
        compute_reference_counts(toy, materialized=["nope"])


def test_runnable(toy):
    assert runnable_blocks(toy) == ["D"]
    assert runnable_blocks(toy, materialized=["D"]) == ["E", "F"]
    assert runnable_blocks(toy, ["j1"], materialized=["D"]) == []


@pytest.mark.parametrize("blocks,edges,jobs,needle", [
    ([BlockMeta("a", 1, True), BlockMeta("a")], [], [], "duplicate"),
    ([BlockMeta("a", 0, True)], [], [], "size_bytes"),
    ([BlockMeta("a", 1, True)], [("a", "zz")], [], "unknown block"),
    ([BlockMeta("a", 1, True), BlockMeta("b")], [("b", "b")], [JobSpec("j", ["b"])], "self-loop"),
    ([BlockMeta("a", 1, True), BlockMeta("b"), BlockMeta("c")],
     [("a", "b"), ("b", "c"), ("c", "b")], [JobSpec("j", ["b", "c"])], "cycle"),
    ([BlockMeta("a", 1, True), BlockMeta("b")], [("a", "b")], [], "outside every job"),
    ([BlockMeta("a", 1, True), BlockMeta("b")], [("a", "b")],
     [JobSpec("j", ["b"]), JobSpec("k", ["b"])], "belongs to"),
    ([BlockMeta("a", 1, True), BlockMeta("b")], [("b", "a")], [JobSpec("j", ["b"])], "has parents"),
    ([BlockMeta("a", 1, True)], [], [JobSpec("j", ["a"])], "input block"),
])
def test_schema_errors(blocks, edges, jobs, needle):
    with pytest.raises(SchemaError, match=needle):
        DagSpec(blocks, edges, jobs)


def test_reference_distance(toy):
    dists, mean = reference_distances(toy, run(toy, "lru", 3).trace)
    assert dists == [1, 2]
    assert mean == 1.5
    single = DagSpec([BlockMeta("a", 1, True), BlockMeta("b"), BlockMeta("c")],
                     [("a", "b"), ("b", "c")], [JobSpec("j", ["b", "c"])])
    dists, _ = reference_distances(single, run(single, "lru", 2).trace)
    assert dists == [0]
    _, mean = reference_distances(toy, [])
    assert math.isnan(mean)
