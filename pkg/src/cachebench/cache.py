"""Set-associative cache state, replacement, eviction sets and priming.

Slots live in flat per-field lists indexed by ``set * ways + way`` so that the
compiled engine can mirror the layout one-to-one.  A slot's ``tag`` field stores
the full line index (address // line_size); the dumped tag is line // num_sets.

Sets are reset lazily: every set carries the epoch it was last initialised in
and is re-initialised on first touch after :meth:`Cache.reset`.  A *warm*
cache re-initialises sets full of clean filler lines (data unrelated to any
benchmark), a cold one leaves them invalid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .config import LatencyTable
from .geometry import CacheGeometry
from .rng import XorShift64Star

READ = "read"
WRITE = "write"

# Level names reported in AccessOutcome
L1_HIT = "L1Hit"
L2_HIT = "L2Hit"
DRAM_FILL = "DramFill"
UNCACHED = "Uncached"
WB_HIT = "WriteBufferHit"

UNCACHED_WAY = -1
# Filler lines sit far above every benchmark address; a multiple of any set count.
FILLER_LINE = 1 << 34
# Byte base of the dedicated eviction-set region used by build_eviction_set.
EVSET_BASE = 1 << 36
PRIME_REPEATS = 10


class LockError(ValueError):
    """A lock request that can never be satisfied (every way already locked)."""


@dataclass(frozen=True)
class Eviction:
    set_index: int
    tag: int
    was_dirty: bool


@dataclass(frozen=True)
class AccessOutcome:
    level: str
    latency_cycles: int
    evicted: Optional[Eviction] = None


class Cache:
    def __init__(
        self,
        geom: CacheGeometry,
        policy: str = "lru",
        seed: int = 0,
        pl: bool = False,
        warm: bool = False,
        latency: LatencyTable | None = None,
    ):
        if policy not in ("lru", "random"):
            raise ValueError(f"unknown policy {policy!r}")
        self.geom = geom
        self.sets = geom.num_sets
        self.ways = geom.associativity
        self.policy = policy
        self.pl = pl
        self.warm = warm
        self.latency = latency or LatencyTable()
        self.rng = XorShift64Star(seed)
        n = self.sets * self.ways
        self.line = [-1] * n
        self.dirty = [0] * n
        self.locked = [0] * n
        self.transient = [0] * n
        self.stamp = [0] * n
        self.epoch = [0] * self.sets
        self.cur_epoch = 1
        self.clock = 0

    # -- slot plumbing -------------------------------------------------

    def set_of(self, line: int) -> int:
        return line % self.sets

    def prep(self, s: int) -> None:
        if self.epoch[s] == self.cur_epoch:
            return
        base = s * self.ways
        for w in range(self.ways):
            i = base + w
            self.line[i] = FILLER_LINE + w * self.sets + s if self.warm else -1
            self.dirty[i] = self.locked[i] = self.transient[i] = 0
            self.stamp[i] = 0
        self.epoch[s] = self.cur_epoch

    def find(self, line: int) -> int:
        s = line % self.sets
        self.prep(s)
        base = s * self.ways
        for i in range(base, base + self.ways):
            if self.line[i] == line:
                return i
        return -1

    def touch(self, i: int) -> None:
        self.clock += 1
        self.stamp[i] = self.clock

    def victim(self, s: int) -> int:
        """Slot to fill in set ``s``: an invalid way, else the policy's pick.

        Under PL a locked pick means the incoming line is handled uncached.
        """
        self.prep(s)
        base = s * self.ways
        for i in range(base, base + self.ways):
            if self.line[i] < 0:
                return i
        if self.policy == "random":
            i = base + self.rng.below(self.ways)
        else:
            i = base
            for j in range(base + 1, base + self.ways):
                if self.stamp[j] < self.stamp[i]:
                    i = j
        if self.pl and self.locked[i]:
            return UNCACHED_WAY
        return i

    def lock_victim(self, s: int) -> int:
        """Slot for a fetch-on-lock fill: invalid first, else among unlocked ways."""
        self.prep(s)
        base = s * self.ways
        for i in range(base, base + self.ways):
            if self.line[i] < 0:
                return i
        free = [i for i in range(base, base + self.ways) if not self.locked[i]]
        if not free:
            raise LockError(f"every way of set {s} is already locked")
        if self.policy == "random":
            return free[self.rng.below(len(free))]
        return min(free, key=lambda j: (self.stamp[j], j))

    def install(self, i: int, line: int, dirty: bool = False, transient: bool = False) -> None:
        self.line[i] = line
        self.dirty[i] = int(dirty)
        self.locked[i] = 0
        self.transient[i] = int(transient)
        self.touch(i)

    def clear(self, i: int) -> None:
        self.line[i] = -1
        self.dirty[i] = self.locked[i] = self.transient[i] = 0
        self.stamp[i] = 0

    def reset(self) -> None:
        self.cur_epoch += 1

    # -- queries -------------------------------------------------------

    def contains(self, addr: int) -> bool:
        return self.find(addr // self.geom.line_size) >= 0

    def resident_lines(self, s: int) -> list:
        self.prep(s)
        base = s * self.ways
        return [self.line[i] for i in range(base, base + self.ways) if self.line[i] >= 0]

    def dump(self, sets=None) -> list:
        """Debug snapshot, one dict per slot of the requested (default: touched) sets."""
        if sets is None:
            sets = [s for s in range(self.sets) if self.epoch[s] == self.cur_epoch]
        out = []
        for s in sets:
            self.prep(s)
            for w in range(self.ways):
                i = s * self.ways + w
                valid = self.line[i] >= 0
                out.append({
                    "set": s,
                    "way": w,
                    "valid": valid,
                    "tag": self.line[i] // self.sets if valid else 0,
                    "dirty": bool(self.dirty[i]),
                    "locked": bool(self.locked[i]),
                    "transient": bool(self.transient[i]),
                })
        return out

    # -- standalone single-level operations ----------------------------

    def access(self, op_kind: str, addr: int) -> AccessOutcome:
        """One access against this cache alone; misses are served from DRAM."""
        if op_kind not in (READ, WRITE):
            raise ValueError(f"unknown op kind {op_kind!r}")
        line = addr // self.geom.line_size
        i = self.find(line)
        if i >= 0:
            self.touch(i)
            if op_kind == WRITE:
                self.dirty[i] = 1
            return AccessOutcome(L1_HIT, self.latency.t_L1)
        s = line % self.sets
        v = self.victim(s)
        if v == UNCACHED_WAY:
            return AccessOutcome(UNCACHED, self.latency.t_dram)
        evicted = None
        if self.line[v] >= 0:
            evicted = Eviction(s, self.line[v] // self.sets, bool(self.dirty[v]))
        self.install(v, line, dirty=(op_kind == WRITE))
        return AccessOutcome(DRAM_FILL, self.latency.t_dram, evicted)

    def pl_replacement_decision(self, s: int):
        """``("evict", way)`` or ``("uncached", None)`` for a miss in set ``s``."""
        i = self.victim(s)
        if i == UNCACHED_WAY:
            return ("uncached", None)
        return ("evict", i - s * self.ways)

    def lock(self, addr: int) -> None:
        line = addr // self.geom.line_size
        i = self.find(line)
        if i < 0:
            i = self.lock_victim(line % self.sets)
            self.install(i, line)
        self.locked[i] = 1

    def unlock(self, addr: int) -> None:
        i = self.find(addr // self.geom.line_size)
        if i >= 0:
            self.locked[i] = 0

    def flush(self, addr: int) -> tuple:
        """Invalidate ``addr`` here; returns (was_present, was_dirty). Locked lines are only cleaned."""
        i = self.find(addr // self.geom.line_size)
        if i < 0:
            return (False, False)
        was_dirty = bool(self.dirty[i])
        if self.locked[i]:
            self.dirty[i] = 0
        else:
            self.clear(i)
        return (True, was_dirty)


def build_eviction_set(target_set: int, geom: CacheGeometry, base: int = EVSET_BASE,
                       protected=()) -> list:
    """``associativity - 1`` addresses mapping to ``target_set``, one way-size apart.

    ``base`` must be a multiple of the way size.  Empty for a direct-mapped cache.
    """
    if not 0 <= target_set < geom.num_sets:
        raise ValueError(f"target set {target_set} out of range")
    if base % geom.way_size:
        raise ValueError("eviction-set base must be way-size aligned")
    skip = {a // geom.line_size for a in protected}
    out = []
    k = 0
    while len(out) < geom.associativity - 1:
        addr = base + target_set * geom.line_size + k * geom.way_size
        if addr // geom.line_size not in skip:
            out.append(addr)
        k += 1
    return out


def prime_set(cache: Cache, eviction_set, op_kind: str = READ, repeats: int = PRIME_REPEATS) -> None:
    for _ in range(repeats):
        for addr in eviction_set:
            cache.access(op_kind, addr)
