"""Cache geometry and address-to-set arithmetic."""

from __future__ import annotations

from dataclasses import dataclass, field


class GeometryError(ValueError):
    pass


def is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CacheGeometry:
    """Total size, associativity and line size of one cache, all in bytes/ways.

    ``strict`` geometries (every simulated cache) require all three values to be
    powers of two.  Non-strict geometries are what a benchmark may *believe* the
    cache looks like; they only need an integral number of sets, which admits
    sizes such as 96 KB.
    """

    total_size: int
    associativity: int
    line_size: int
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.associativity < 1:
            raise GeometryError(f"associativity must be >= 1, got {self.associativity}")
        if self.line_size < 8 or not is_pow2(self.line_size):
            raise GeometryError(f"line size must be a power of two >= 8, got {self.line_size}")
        if self.total_size % (self.associativity * self.line_size):
            raise GeometryError(
                f"{self.total_size} B is not a whole number of "
                f"{self.associativity}-way sets of {self.line_size} B lines"
            )
        if self.strict and not (is_pow2(self.total_size) and is_pow2(self.associativity)):
            raise GeometryError(f"simulated cache must have power-of-two size and ways: {self}")

    @property
    def num_sets(self) -> int:
        return self.total_size // (self.associativity * self.line_size)

    @property
    def way_size(self) -> int:
        """Byte distance between consecutive addresses that share a set."""
        return self.total_size // self.associativity

    def line_of(self, addr: int) -> int:
        return addr // self.line_size

    def set_index(self, addr: int) -> int:
        return (addr // self.line_size) % self.num_sets

    def loose(self) -> "CacheGeometry":
        return CacheGeometry(self.total_size, self.associativity, self.line_size, strict=False)

    def replace(self, **changes) -> "CacheGeometry":
        values = dict(
            total_size=self.total_size,
            associativity=self.associativity,
            line_size=self.line_size,
            strict=self.strict,
        )
        values.update(changes)
        return CacheGeometry(**values)

    def to_dict(self) -> dict:
        return {
            "total_size": self.total_size,
            "associativity": self.associativity,
            "line_size": self.line_size,
        }

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "CacheGeometry":
        return cls(int(d["total_size"]), int(d["associativity"]), int(d["line_size"]), strict=strict)

    def __str__(self) -> str:
        return f"{self.total_size // 1024}KB/{self.associativity}-way/{self.line_size}B"


def set_index(addr: int, geom: CacheGeometry) -> int:
    return geom.set_index(addr)
