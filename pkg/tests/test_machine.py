import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from cachebench.cache import L1_HIT, L2_HIT, WB_HIT
from cachebench.config import ConfigError, default_machine
from cachebench.machine import Machine

LINE = 64


def mk(**kw):
    cfg = default_machine()
    tog = {k: kw.pop(k) for k in list(kw) if k in ("scu", "store_buffer", "write_buffer_size",
                                                    "mshr_size", "transient_region")}
    if tog:
        cfg = cfg.with_toggles(**tog)
    if kw:
        cfg = cfg.with_secure(**kw)
    m = Machine(cfg, seed=1)
    m.reset()
    return m


def test_read_miss_then_hit():
    m = mk()
    assert m.access(0, "read", 0x4000).latency_cycles == 200
    out = m.access(0, "read", 0x4000)
    assert out.level == L1_HIT and out.latency_cycles == 4


def test_write_buffer_hit_and_disable():
    m = mk()
    m.access(0, "write", 0x4000)
    assert m.access(0, "read", 0x4000).level == WB_HIT
    m = mk(write_buffer_size=0)
    m.access(0, "write", 0x4000)
    assert m.access(0, "read", 0x4000).level == L1_HIT


def test_write_buffer_drains_on_miss():
    m = mk()
    m.access(0, "write", 0x4000)
    m.access(0, "read", 0x9_0040)   # different set
    assert m.access(0, "read", 0x4000).level == L1_HIT


def test_store_buffer_delta_on_clean_write():
    m = mk()
    m.access(0, "read", 0x4000)
    assert m.access(0, "write", 0x4000).latency_cycles == 4 + 6
    m = mk(store_buffer=False)
    m.access(0, "read", 0x4000)
    assert m.access(0, "write", 0x4000).latency_cycles == 4


def test_flush_latency_by_level():
    m = mk()
    m.access(0, "read", 0x4000)
    assert m.flush_line(0x4000) == 40
    assert m.flush_line(0x4000) == 30
    m.access(0, "read", 0x4000)
    m.l1[0].clear(m.l1[0].find(0x4000 // LINE))       # leave it in L2 only
    assert m.flush_line(0x4000) == 60
    m = mk(scu=True)
    m.access(0, "read", 0x4000)
    m.l1[0].clear(m.l1[0].find(0x4000 // LINE))
    assert m.flush_line(0x4000) == 40


def test_coherence_write_invalidates_other_copy():
    m = mk()
    m.access(0, "read", 0x4000)
    m.access(1, "write", 0x4000)
    assert not m.resident(0, 0x4000)
    assert m.counters[m_idx("coherence_invalidations")] == 1


def test_dirty_remote_copy_downgrades_on_read():
    m = mk()
    m.access(1, "write", 0x4000)
    m.wb[1].clear()
    out = m.access(0, "read", 0x4000)
    assert out.level == L2_HIT and out.latency_cycles == 14


def test_cross_cluster_penalty():
    m = mk()
    m.access(4, "write", 0x4000)
    assert m.access(0, "read", 0x4000).latency_cycles == 14 + 30


def test_remote_invalidation_latencies():
    m = mk()
    m.access(0, "read", 0x4000)
    assert m.remote_invalidate(0x4000, 2) == 50
    m.access(0, "write", 0x8000)
    assert m.remote_invalidate(0x8000, 2) == 80


def test_mshr_overflow_penalty():
    m = mk(mshr_size=1)
    m.mshr = 0
    assert m.access(0, "read", 0x4000).latency_cycles == 200
    assert m.access(0, "read", 0x8000).latency_cycles == 300


def test_transient_lines_skip_l2():
    m = mk(transient_region=True)
    m.region_lo, m.region_hi = 0x4000 // LINE, 0x4000 // LINE + 8
    m.access(0, "read", 0x4000)
    assert m.resident(0, 0x4000) and not m.in_l2(0x4000)


def m_idx(name):
    from cachebench.machine import COUNTERS
    return COUNTERS.index(name)


# -- write-back conservation ---------------------------------------------------

ops = st.lists(st.tuples(st.sampled_from(["read", "write", "flush", "rinv"]),
                         st.integers(0, 7), st.integers(0, 40)), max_size=300)


@settings(max_examples=60, deadline=None)
@given(ops)
def test_dirty_data_is_conserved(seq):
    m = mk()
    for op, core, k in seq:
        addr = 0x10_0000 + (k % 5) * 8192 * 2 + (k // 5) * 64
        if op == "flush":
            m.flush_line(addr, core)
        elif op == "rinv":
            m.remote_invalidate(addr, core)
        else:
            m.access(core, op, addr)
    m.reset()
    k = m.counter_dict()
    assert k["dirty_marks"] == k["writebacks"] + k["dirty_dropped"] + k["dirty_live"]
    assert k["dirty_live"] == 0


# -- RF -------------------------------------------------------------------------

def test_rf_window_uniform_chi_square():
    m = mk(kind="rf", rf_start=2, rf_size=5)
    n = 100_000
    fetched = np.array([m.rf_fill(100 * LINE) // LINE for _ in range(n)])
    assert fetched.min() >= 98 and fetched.max() < 103
    counts = np.bincount(fetched - 98, minlength=5)
    assert stats.chisquare(counts).pvalue > 0.01


def test_rf_window_of_one_is_a_normal_fill():
    m = mk(kind="rf", rf_start=0, rf_size=1)
    assert m.rf_fill(0x4000) == 0x4000
    m.access(0, "read", 0x4000)
    assert m.access(0, "read", 0x4000).level == L1_HIT


def test_rf_demand_line_goes_to_l2_only():
    m = mk(kind="rf", rf_size=16)
    hits = 0
    for k in range(200):
        addr = 0x100_0000 + k * 4096
        m.access(0, "read", addr)
        if m.resident(0, addr):
            continue             # the random pick was the demand line itself
        assert m.access(0, "read", addr).level == L2_HIT
        hits += 1
    assert hits > 150
    assert m.counter_dict()["rf_demand_fill_violations"] == 0
    assert m.counter_dict()["rf_window_violations"] == 0


# -- PL -------------------------------------------------------------------------

def test_pl_lock_requires_pl():
    with pytest.raises(ConfigError):
        mk().pl_lock(0x4000)


def test_pl_write_to_locked_line_still_uses_write_buffer():
    m = mk(kind="pl")
    m.pl_lock(0x4000)
    m.access(0, "write", 0x4000)
    assert m.access(0, "read", 0x4000).level == WB_HIT
    m = mk(kind="pl", write_buffer_size=0)
    m.pl_lock(0x4000)
    m.access(0, "write", 0x4000)
    assert m.access(0, "read", 0x4000).level == L1_HIT


pl_ops = st.lists(st.tuples(st.sampled_from(["read", "write", "flush", "lock", "unlock"]),
                            st.integers(0, 2), st.integers(0, 11)), max_size=200)


@settings(max_examples=60, deadline=None)
@given(pl_ops)
def test_pl_lock_directory_matches_slots(seq):
    m = mk(kind="pl")
    for op, core, k in seq:
        addr = 0x20_0000 + k * 8192          # all in one set
        try:
            if op == "lock":
                m.pl_lock(addr, core)
            elif op == "unlock":
                m.pl_unlock(addr, core)
            elif op == "flush":
                m.flush_line(addr, core)
            else:
                m.access(core, op, addr)
        except ConfigError:
            pass                              # set already fully locked
        for c, line in m.lock_dir:
            i = m.l1[c].find(line)
            assert i >= 0 and m.l1[c].locked[i]
        flagged = {(c, cache.line[i]) for c, cache in enumerate(m.l1)
                   for i in range(len(cache.line)) if cache.locked[i] and cache.line[i] >= 0}
        assert flagged == m.lock_dir
    assert m.counter_dict()["locked_evictions"] == 0
