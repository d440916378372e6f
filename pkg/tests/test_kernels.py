import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrccache import _kernels_py, kernels

compiled = pytest.importorskip("lrccache._kernels")


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.booleans()), min_size=0, max_size=40),
       st.integers(0, 6))
def test_parity(rows, target):
    n = len(rows)
    primary = np.array([r[0] for r in rows] + [0], dtype=np.int64)
    secondary = np.array([r[1] for r in rows] + [0], dtype=np.int64)
    pinned = np.array([r[2] for r in rows] + [0], dtype=np.uint8)
    slots = np.arange(n + 1, dtype=np.int64)[::-1].copy()
    assert (compiled.select_victim(primary, secondary, slots[1:], n, pinned)
            == _kernels_py.select_victim(primary, secondary, slots[1:], n, pinned))
    assert (compiled.midrank_percentile(primary, slots[1:], n, target)
            == pytest.approx(_kernels_py.midrank_percentile(primary, slots[1:], n, target)))


def test_all_pinned_returns_minus_one():
    a = np.zeros(3, dtype=np.int64)
    pins = np.ones(3, dtype=np.uint8)
    for mod in (compiled, _kernels_py):
        assert mod.select_victim(a, a, np.arange(3, dtype=np.int64), 3, pins) == -1


def test_tie_break_by_secondary_then_slot():
    p = np.array([1, 0, 0, 0], dtype=np.int64)
    s = np.array([0, 5, 3, 3], dtype=np.int64)
    pins = np.zeros(4, dtype=np.uint8)
    slots = np.array([3, 2, 1, 0], dtype=np.int64)
    for mod in (compiled, _kernels_py):
        assert mod.select_victim(p, s, slots, 4, pins) == 2


def test_pure_env_forces_fallback():
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-c", "import lrccache; print(lrccache.BACKEND)"],
                         env={"LRCCACHE_PURE": "1", "PATH": ""}, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
