import statistics

from lrccache import run
from lrccache.simulator import measure_inactive_fraction, measure_rank_percentiles
from lrccache.workloads import GeneratorParams, generate


def test_toy_inactive_series(toy):
    # LRU keeps B (count 0 after D) around; LRC evicts it first
    lru = run(toy, "lru", 3).inactive_fraction_series
    lrc = run(toy, "lrc", 3).inactive_fraction_series
    assert [t for t, _ in lru] == [1, 2, 3]
    assert lru[0][1] > lrc[0][1]
    assert all(0 <= x <= 1 for _, x in lru + lrc)


def test_series_is_cached_and_matches_function(toy):
    rep = run(toy, "lru", 3)
    assert rep.inactive_fraction_series == measure_inactive_fraction(rep.trace, toy)


def test_rank_percentiles_toy(toy):
    log = run(toy, "lrc", 3).rank_percentile_log
    assert len(log) == 5
    # D is the highest-count live block when E reads it
    d_at_e = log[2]
    assert d_at_e[3] == 100.0
    for _, *pcts in log:
        assert all(0 < p <= 100 for p in pcts)
    assert log == measure_rank_percentiles(run(toy, "lrc", 3).trace, toy)


def test_refcount_rank_is_predictive():
    # accessed blocks rank higher by reference count than by recency
    for seed in (1, 2, 3):
        d = generate(GeneratorParams(seed=seed))
        log = run(d, "lru", d.total_bytes // 2).rank_percentile_log
        assert statistics.median(r[3] for r in log) > statistics.median(r[1] for r in log)
