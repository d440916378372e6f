import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrccache import Cache, EvictionLog
from lrccache.errors import EvictionImpossibleError, InvalidArgumentError, UncacheableError


def filled(policy, **kw):
    c = Cache(policy, 3, **kw)
    for b in "abc":
        c.insert(b, 1)
    return c


def test_lru_evicts_least_recent():
    c = filled("lru")
    c.record_access("a")
    assert c.insert("d", 1).victims == ["b"]
    assert c.recency_order() == ["d", "a", "c"]


def test_lfu_counts_accesses_since_insert():
    c = filled("lfu")
    c.record_access("a")
    c.record_access("a")
    c.record_access("b")
    assert c.insert("d", 1).victims == ["c"]
    assert c.frequency("d") == 0
    # d has frequency 0 and is the newest, so b (1) is not chosen over it
    assert c.insert("e", 1).victims == ["d"]


def test_lrc_smallest_count_then_lru():
    c = filled("lrc", profile={"a": 2, "b": 0, "c": 0})
    d = c.insert("d", 1)
    assert d.victims == ["b"] and d.reason == [("b", 0)]
    c.sync_profile({"c": 5})
    assert c.evict_candidate() == "d"


def test_sync_profile_rejects_negative():
    with pytest.raises(InvalidArgumentError):
        Cache("lrc", 3).sync_profile({"a": -1})


def test_min_farthest_next_use():
    future = ["a", "b", "c", "a", "b"]
    c = Cache("min", 2, future=future)
    c.insert("a", 1)
    c.insert("b", 1)
    c.record_access("a")
    c.record_access("b")
    assert c.next_use("a") == 3
    # c is used now; among a (3) and b (4), b is farther
    assert c.insert("c", 1).victims == ["b"]
    c.record_access("c")
    assert c.insert("b", 1).victims == ["c"]


def test_min_requires_future_and_checks_it():
    with pytest.raises(InvalidArgumentError):
        Cache("min", 2)
    c = Cache("min", 2, future=["a"])
    with pytest.raises(InvalidArgumentError):
        c.record_access("b")


def test_pinned_blocks_survive():
    c = filled("lru")
    c.pin("a")
    c.pin("b")
    assert c.insert("d", 1).victims == ["c"]
    c.pin("d")
    with pytest.raises(EvictionImpossibleError):
        c.insert("e", 1)
    assert set(c.resident) == {"a", "b", "d"}
    with pytest.raises(InvalidArgumentError):
        c.evict("a")
    with pytest.raises(InvalidArgumentError):
        c.pin("zz")


def test_failed_insert_evicts_nothing():
    c = filled("lru")
    c.pin("a")
    with pytest.raises(EvictionImpossibleError):
        c.insert("big", 3)
    assert len(c) == 3


def test_uncacheable():
    with pytest.raises(UncacheableError):
        Cache("lru", 3).insert("x", 4)


def test_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        Cache("fifo", 3)
    with pytest.raises(InvalidArgumentError):
        Cache("lru", 0)
    c = filled("lru")
    with pytest.raises(InvalidArgumentError):
        c.insert("a", 1)


def test_eviction_log_csv():
    log = EvictionLog()
    c = Cache("lrc", 1, profile={"a": 1}, log=log)
    c.insert("a", 1)
    c.step = 7
    c.insert("b", 1)
    assert log.to_csv().splitlines() == [
        "step,policy,event,block,key_value", "0,lrc,insert,a,1", "7,lrc,evict,a,1", "7,lrc,insert,b,0"]


def test_many_blocks_grow_storage():
    c = Cache("lrc", 10)
    for i in range(300):
        c.sync_profile({f"x{i}": i % 3})
        c.insert(f"x{i}", 1)
    assert len(c) == 10 and c.used_bytes == 10


ops = st.lists(st.tuples(st.sampled_from(["insert", "access", "pin", "unpin", "count"]),
                         st.integers(0, 12), st.integers(1, 4)), max_size=80)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(["lru", "lfu", "lrc", "lrc-online"]), st.integers(1, 10), ops)
def test_invariants_under_random_ops(policy, cap, seq):
    c = Cache(policy, cap)
    for op, k, size in seq:
        b = f"b{k}"
        if op == "insert" and b not in c:
            pinned_before = set(c.pinned)
            try:
                d = c.insert(b, size)
            except (UncacheableError, EvictionImpossibleError):
                continue
            if d:
                assert not set(d.victims) & pinned_before
                if policy.startswith("lrc"):
                    # zero-first: no positive-count victim while an unpinned zero was resident
                    for v, key in d.reason:
                        assert key == 0 or all(c.refcount(x) > 0 for x in c.resident
                                               if x not in c.pinned and x != b)
        elif op == "access":
            c.record_access(b)
        elif op == "pin" and b in c:
            c.pin(b)
        elif op == "unpin":
            c.unpin(b)
        elif op == "count":
            c.sync_profile({b: size - 1})
        assert c.used_bytes <= cap
        assert c.used_bytes == sum(c.resident.values())
        assert c.pinned <= set(c.resident)
