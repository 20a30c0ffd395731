import pytest

from cachebench.geometry import CacheGeometry, GeometryError
from cachebench.rng import XorShift64Star, derive_seed, gauss, stable_hash


def test_geometry_derived_values():
    g = CacheGeometry(32 * 1024, 4, 64)
    assert g.num_sets == 128
    assert g.way_size == 8192
    assert g.set_index(0x12345) == (0x12345 // 64) % 128


@pytest.mark.parametrize("args", [(32768, 3, 64), (32768, 4, 48), (1000, 4, 64), (0, 4, 64)])
def test_geometry_rejects_bad_shapes(args):
    with pytest.raises(GeometryError):
        CacheGeometry(*args)


def test_loose_geometry_accepts_non_power_of_two_size():
    g = CacheGeometry(98304, 4, 64, strict=False)
    assert g.way_size == 24576


def test_geometry_round_trip():
    g = CacheGeometry(65536, 16, 64)
    assert CacheGeometry.from_dict(g.to_dict()) == g


def test_xorshift_is_reproducible_and_below_is_bounded():
    a, b = XorShift64Star(42), XorShift64Star(42)
    assert [a.next() for _ in range(5)] == [b.next() for _ in range(5)]
    r = XorShift64Star(1)
    draws = [r.below(7) for _ in range(2000)]
    assert set(draws) == set(range(7))


def test_derived_streams_differ():
    seeds = {derive_seed(0, s) for s in range(100)}
    assert len(seeds) == 100
    assert derive_seed(3, 5) == derive_seed(3, 5)
    assert stable_hash("p05-frr-ts-LL") == stable_hash("p05-frr-ts-LL")


def test_gauss_moments():
    r = XorShift64Star(9)
    xs = [gauss(r) for _ in range(20000)]
    m = sum(xs) / len(xs)
    v = sum((x - m) ** 2 for x in xs) / len(xs)
    assert abs(m) < 0.03
    assert abs(v - 1.0) < 0.05
