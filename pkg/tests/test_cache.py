import pytest

from cachebench.cache import (DRAM_FILL, L1_HIT, READ, UNCACHED, WRITE, Cache, LockError,
                              build_eviction_set, prime_set)
from cachebench.geometry import CacheGeometry

from conftest import load_data

G = CacheGeometry(32768, 4, 64)


def same_set_addrs(n, s=5, base=1 << 30):
    return [base + s * 64 + k * G.way_size for k in range(n)]


def test_hit_after_fill():
    c = Cache(G, "lru")
    assert c.access(READ, 0x1000).level == DRAM_FILL
    out = c.access(READ, 0x1000)
    assert out.level == L1_HIT and out.latency_cycles == 4


def test_lru_evicts_least_recent():
    c = Cache(G, "lru")
    a = same_set_addrs(5)
    for x in a[:4]:
        c.access(READ, x)
    c.access(READ, a[0])           # a[1] is now oldest
    ev = c.access(READ, a[4]).evicted
    assert ev is not None
    assert not c.contains(a[1]) and c.contains(a[0])


def test_write_marks_dirty_and_eviction_reports_it():
    c = Cache(G, "lru")
    a = same_set_addrs(5)
    c.access(WRITE, a[0])
    for x in a[1:4]:
        c.access(READ, x)
    ev = c.access(READ, a[4]).evicted
    assert ev.was_dirty


def test_random_policy_reproducible():
    def run(seed):
        c = Cache(G, "random", seed=seed)
        for x in same_set_addrs(40):
            c.access(READ, x)
        return c.resident_lines(5)
    assert run(3) == run(3)


def test_dump_fields():
    c = Cache(G, "lru")
    c.access(WRITE, 0x40)
    rows = c.dump()
    assert {"set", "way", "valid", "tag", "dirty", "locked", "transient"} <= set(rows[0])
    assert any(r["valid"] and r["dirty"] for r in rows)


def test_eviction_set_maps_to_target():
    ev = build_eviction_set(17, G)
    assert len(ev) == 3
    assert all(G.set_index(x) == 17 for x in ev)
    assert len({x // 64 for x in ev}) == 3
    assert build_eviction_set(0, CacheGeometry(8192, 1, 64)) == []


def test_eviction_set_skips_protected_lines():
    base = 1 << 36
    target = base + 17 * 64
    ev = build_eviction_set(17, G, base=base, protected=(target,))
    assert target not in ev


def prime_fraction(ways, trials=1000):
    g = CacheGeometry(ways * 8192, ways, 64)
    ok = 0
    for t in range(trials):
        c = Cache(g, "random", seed=1000 + t, warm=True)
        ev = build_eviction_set(9, g)
        prime_set(c, ev)
        ok += all(c.contains(x) for x in ev)
    return ok / trials


def test_prime_matches_oracle():
    oracle = load_data("prime_oracle.json")
    for ways, frac in oracle["full_residency_fraction"].items():
        assert abs(prime_fraction(int(ways)) - frac) < 0.04, ways


def test_prime_fills_four_way_set():
    oracle = load_data("prime_oracle.json")
    assert prime_fraction(4) >= oracle["threshold"]


# -- PL cache --------------------------------------------------------------

def test_locked_line_survives_random_fills():
    c = Cache(G, "random", pl=True, seed=1)
    target = same_set_addrs(1)[0]
    c.lock(target)
    for x in same_set_addrs(10_000, base=1 << 33):
        c.access(READ, x)
    assert c.contains(target)


def test_unlocked_line_is_evicted_within_oracle_bound():
    bound = load_data("unlock_oracle.json")["fills_for_1e-6_survival"]
    worst = 0
    for seed in range(300):
        c = Cache(G, "random", pl=True, seed=seed, warm=True)
        target = same_set_addrs(1)[0]
        c.lock(target)
        c.unlock(target)
        for n, x in enumerate(same_set_addrs(bound, base=1 << 33), 1):
            c.access(READ, x)
            if not c.contains(target):
                worst = max(worst, n)
                break
        else:
            pytest.fail(f"seed {seed}: unlocked line survived {bound} fills")
    assert worst > 1


def test_fully_locked_set_goes_uncached():
    c = Cache(G, "random", pl=True)
    lines = same_set_addrs(4)
    for x in lines:
        c.lock(x)
    before = c.dump([5])
    for x in same_set_addrs(50, base=1 << 33):
        assert c.access(READ, x).level == UNCACHED
        assert c.pl_replacement_decision(5) == ("uncached", None)
    assert c.dump([5]) == before


def test_one_locked_line_uncached_rate():
    c = Cache(G, "random", pl=True, seed=11)
    for x in same_set_addrs(4):
        c.access(READ, x)
    c.lock(same_set_addrs(1)[0])
    n = 10_000
    unc = sum(c.pl_replacement_decision(5)[0] == "uncached" for _ in range(n))
    assert abs(unc / n - 1 / 4) <= 0.02


def test_no_locks_matches_plain_random():
    a = Cache(G, "random", pl=True, seed=5)
    b = Cache(G, "random", pl=False, seed=5)
    for x in same_set_addrs(200):
        assert a.access(READ, x) == b.access(READ, x)
    assert a.dump() == b.dump()


def test_overlocking_a_set_is_an_error():
    c = Cache(G, "random", pl=True)
    for x in same_set_addrs(4):
        c.lock(x)
    with pytest.raises(LockError):
        c.lock(same_set_addrs(5)[4])
