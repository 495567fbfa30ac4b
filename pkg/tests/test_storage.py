"""Window statistics of the storage process against literal definitions."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridstorage import simulate, storage
from gridstorage.errors import WindowError
from gridstorage.simulate import GridSpec, RngStream


def _brute_force(drifted, j_max):
    """Double-loop transcription: Q(j) = max_{i >= j} (Y_i - Y_j)."""
    q = []
    for j in range(j_max + 1):
        best = -np.inf
        for i in range(j, len(drifted)):
            cand = drifted[i] - drifted[j]
            if cand > best:
                best = cand
        q.append(best)
    return q


def _sample_path(seed, n, drift):
    grid = GridSpec(delta=0.2, horizon_n=n)
    return simulate.simulate_fbm(0.6, grid, RngStream(seed, 0), drift_c=drift)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**32 - 1),
    n=st.integers(min_value=1, max_value=14),
    j_max=st.integers(min_value=0, max_value=14),
)
def test_window_statistics_match_brute_force(seed, n, j_max):
    j_max = min(j_max, n)
    path = _sample_path(seed, n, drift=1.0)
    q = _brute_force(path.drifted, j_max)
    q0, sup, inf_, truncated = storage.window_statistics(path.drifted, j_max)
    assert q0 == q[0]
    assert sup == max(q)
    assert inf_ == min(q)
    # the window supremum is truncation-suspect iff some scan hit the horizon end
    m = storage.backward_running_max(path.drifted)
    assert truncated == (m[j_max] == path.drifted[-1])


def test_truncation_flag_semantics():
    rising = np.array([0.0, 1.0, 2.0, 3.0])
    falling = np.array([0.0, 3.0, 1.0, 0.5])
    assert storage.window_statistics(rising, 0)[3] is np.True_ or bool(
        storage.window_statistics(rising, 0)[3]
    )
    assert not bool(storage.window_statistics(falling, 0)[3])


def test_window_index_floor():
    assert storage.window_index(0.0, 0.1) == 0
    assert storage.window_index(0.25, 0.1) == 2
    assert storage.window_index(0.3, 0.1) == 3  # guarded against 0.3/0.1 = 2.9999...


def test_window_beyond_horizon_raises():
    path = _sample_path(1, 10, drift=1.0)
    with pytest.raises(WindowError):
        storage.storage_window(path, T=10 * 0.2 + 0.2)


def test_result_fields_and_json_keys():
    path = _sample_path(2, 12, drift=1.0)
    res = storage.storage_window(path, T=0.6)
    assert res.inf_window <= res.q0 <= res.sup_window
    d = res.to_json_dict()
    assert list(d) == ["q0", "sup", "inf", "T", "truncated"]
    assert d["T"] == 0.6
    assert isinstance(d["truncated"], bool)


def test_origin_matches_zero_window():
    path = _sample_path(3, 12, drift=1.0)
    res = storage.storage_window(path, T=0.0)
    assert storage.storage_at_origin(path) == res.q0 == res.sup_window == res.inf_window


def test_zero_window_drops_no_mass():
    # with T = 0 the scan is the full-horizon maximum of the drifted path
    path = _sample_path(4, 12, drift=1.0)
    assert storage.storage_at_origin(path) == float(np.max(path.drifted))
