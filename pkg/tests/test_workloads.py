import json

import pytest

from lrccache import compute_reference_counts, run
from lrccache.errors import InvalidArgumentError, SchemaError
from lrccache.workloads import (GeneratorParams, compose_tenants, dag_from_json, dag_to_json,
                                generate, load_dag, save_dag, split_tenant)


def test_static_block_count_equals_iterations():
    d = generate(GeneratorParams("iterative", iterations=3, blocks_per_stage=1, fan_in=1))
    assert compute_reference_counts(d)["static/p000"] == 3


@pytest.mark.parametrize("family", ["iterative", "pregel_like", "layered_random"])
def test_static_partitions_and_reachability(family):
    p = GeneratorParams(family, iterations=6, seed=4, skip_edges=True)
    d = generate(p)
    counts = compute_reference_counts(d)
    for j in range(p.blocks_per_stage):
        assert counts[f"static/p{j:03d}"] == p.iterations
    reach = set(d.inputs)
    for job in d.jobs:
        for t in job.target_blocks:
            assert d.parents[t]
    frontier = list(d.inputs)
    while frontier:
        b = frontier.pop()
        for c in d.children[b]:
            if c not in reach:
                reach.add(c)
                frontier.append(c)
    assert reach == set(d.blocks)
    assert len(d.jobs) == p.iterations


def test_single_iteration_online_equals_offline():
    d = generate(GeneratorParams(iterations=1, seed=9))
    assert len(d.jobs) == 1
    c = d.total_bytes // 2
    assert run(d, "lrc", c).fingerprint() == run(d, "lrc-online", c).fingerprint()


def test_same_seed_identical_bytes(tmp_path):
    p = GeneratorParams(family="layered_random", seed=11)
    save_dag(generate(p), tmp_path / "a.json")
    save_dag(generate(p), tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert generate(GeneratorParams(seed=12)) != generate(GeneratorParams(seed=13))


def test_round_trip_large(tmp_path):
    d = generate(GeneratorParams(iterations=40, blocks_per_stage=24, seed=1))
    assert len(d) >= 1000
    save_dag(d, tmp_path / "big.json")
    assert load_dag(tmp_path / "big.json") == d


def test_skip_edges_distance():
    from lrccache import reference_distances
    plain = generate(GeneratorParams(seed=1, static_block_reuse=False))
    skip = generate(GeneratorParams(seed=1, static_block_reuse=False, skip_edges=True))
    m0 = reference_distances(plain, run(plain, "lru", plain.total_bytes).trace)[1]
    m1 = reference_distances(skip, run(skip, "lru", skip.total_bytes).trace)[1]
    assert m0 == 1.0 and m1 > m0


@pytest.mark.parametrize("kw", [dict(family="x"), dict(iterations=0), dict(blocks_per_stage=0),
                                dict(fan_in=9), dict(size_min=3, size_max=2),
                                dict(static_size_factor=0)])
def test_bad_params(kw):
    with pytest.raises(InvalidArgumentError):
        GeneratorParams(**kw)


def test_params_json():
    p = GeneratorParams(seed=5, skip_edges=True)
    assert GeneratorParams.from_json(p.to_json()) == p
    with pytest.raises(InvalidArgumentError):
        GeneratorParams.from_json('{"colour": 1}')


def test_fixture_shape(toy):
    assert len(toy) == 6 and len(toy.edges) == 5


def _doc(toy):
    return json.loads(dag_to_json(toy))


def test_schema_unknown_edge(toy):
    doc = _doc(toy)
    doc["edges"].append(["A", "nope"])
    with pytest.raises(SchemaError, match="unknown block"):
        dag_from_json(json.dumps(doc))


def test_schema_context(toy, tmp_path):
    doc = _doc(toy)
    doc["blocks"][2]["size_bytes"] = "big"
    with pytest.raises(SchemaError, match=r"blocks\[2\]\.size_bytes"):
        dag_from_json(json.dumps(doc))
    with pytest.raises(SchemaError, match="line 1 column"):
        dag_from_json("{oops")
    doc = _doc(toy)
    doc["extra"] = 1
    with pytest.raises(SchemaError, match="keys"):
        dag_from_json(json.dumps(doc))
    bad = tmp_path / "bad.json"
    bad.write_text("[1,")
    with pytest.raises(SchemaError, match="bad.json"):
        load_dag(bad)


def test_schema_cycle_and_duplicate(toy):
    doc = _doc(toy)
    doc["edges"] += [["E", "F"], ["F", "E"]]
    with pytest.raises(SchemaError, match="cycle"):
        dag_from_json(json.dumps(doc))
    doc = _doc(toy)
    doc["blocks"].append(dict(doc["blocks"][0]))
    with pytest.raises(SchemaError, match="duplicate"):
        dag_from_json(json.dumps(doc))


def test_compose_tenants(toy):
    ts = compose_tenants([toy, toy], ["t1/", "t2/"])
    names = set(ts[0].blocks) | set(ts[1].blocks)
    assert len(names) == 12
    assert split_tenant(ts[1], "t2/") == toy
    with pytest.raises(InvalidArgumentError):
        compose_tenants([toy, toy], ["t/", "t/"])
    with pytest.raises(InvalidArgumentError):
        compose_tenants([toy, toy], ["t", "t2"])
    with pytest.raises(InvalidArgumentError):
        split_tenant(ts[0], "t2/")


def test_table7_shape():
    a = [generate(GeneratorParams("iterative", seed=i)) for i in range(8)]
    b = [generate(GeneratorParams("pregel_like", seed=i)) for i in range(8)]
    assert len(compose_tenants(a + b)) == 16
