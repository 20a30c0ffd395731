"""Multi-core machine: private L1s, shared inclusive L2, coherence, write buffer, MSHR.

This is the reference engine.  ``_engine.pyx`` re-implements
:meth:`Machine.run_program` in C with the same state layout, the same order of
random draws and the same counters; ``tests/test_engine_parity.py`` holds the
two to bit-equality.

All internal operations work on line indices (byte address // line size).
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .cache import (DRAM_FILL, L1_HIT, L2_HIT, UNCACHED, UNCACHED_WAY, WB_HIT, AccessOutcome,
                    Cache, Eviction, LockError, PRIME_REPEATS)
from .config import ConfigError, MachineConfig
from .program import OP_FLUSH, OP_LOCK, OP_READ, OP_RINV, OP_UNLOCK, OP_WRITE, Program
from .rng import XorShift64Star, derive_seed, gauss

COUNTERS = (
    "l1_hits", "l1_misses", "l2_hits", "dram_fills", "wb_hits", "uncached",
    "writebacks", "dirty_marks", "dirty_dropped", "dirty_live",
    "locked_evictions", "l1_evictions", "rf_fetches", "rf_window_violations",
    "rf_demand_fill_violations", "coherence_invalidations", "mshr_stalls",
    "flushes", "remote_invalidations",
)
(C_L1_HIT, C_L1_MISS, C_L2_HIT, C_DRAM, C_WB_HIT, C_UNCACHED, C_WB, C_DIRTY_MARK,
 C_DIRTY_DROP, C_DIRTY_LIVE, C_LOCKED_EVICT, C_L1_EVICT, C_RF_FETCH, C_RF_WINDOW,
 C_RF_DEMAND, C_COHERENCE, C_MSHR, C_FLUSH, C_RINV) = range(len(COUNTERS))

# Stream ids for derive_seed; shared with the compiled engine.
STREAM_L1 = 0x100
STREAM_L2 = 0x180
STREAM_RF = 0x200
STREAM_NOISE = 0x300


class Machine:
    def __init__(self, cfg: MachineConfig, seed: int = 0, region: tuple = (0, 0)):
        self.cfg = cfg
        self.lat = cfg.latency
        self.tog = cfg.toggles
        self.sec = cfg.secure
        self.n_cores = len(cfg.cores)
        self.cluster = [c.cluster for c in cfg.cores]
        pl = self.sec.kind == "pl"
        self.l1 = [Cache(c.l1_geometry, c.l1_policy, pl=pl, warm=cfg.warm_reset, latency=self.lat)
                   for c in cfg.cores]
        self.l2 = Cache(cfg.l2_geometry, "lru", warm=False, latency=self.lat)
        self.wb = [[] for _ in cfg.cores]
        self.rf_rng = [XorShift64Star(1) for _ in cfg.cores]
        self.noise_rng = XorShift64Star(1)
        self.counters = [0] * len(COUNTERS)
        self.lock_dir: set = set()
        self.mshr = 0
        self.region_lo, self.region_hi = region
        self.last_level = L1_HIT
        self.last_evicted: Optional[Eviction] = None
        self.reseed(seed)

    # -- lifecycle -----------------------------------------------------

    def reseed(self, seed: int) -> None:
        for i, cache in enumerate(self.l1):
            cache.rng = XorShift64Star(derive_seed(seed, STREAM_L1 + i))
            self.rf_rng[i] = XorShift64Star(derive_seed(seed, STREAM_RF + i))
        self.l2.rng = XorShift64Star(derive_seed(seed, STREAM_L2))
        self.noise_rng = XorShift64Star(derive_seed(seed, STREAM_NOISE))

    def reset(self) -> None:
        """Forget all cached state (L1s back to filler, L2 empty, buffers drained)."""
        for cache in self.l1:
            cache.reset()
        self.l2.reset()
        for q in self.wb:
            q.clear()
        k = self.counters
        k[C_DIRTY_DROP] += k[C_DIRTY_LIVE]
        k[C_DIRTY_LIVE] = 0
        self.lock_dir.clear()
        self.mshr = 0

    def counter_dict(self) -> dict:
        return dict(zip(COUNTERS, self.counters))

    def in_region(self, line: int) -> bool:
        return self.region_lo <= line < self.region_hi

    def _is_transient(self, line: int) -> bool:
        return self.tog.transient_region and self.in_region(line)

    def _cross(self, a: int, b: int) -> int:
        return self.lat.cross_cluster_penalty if self.cluster[a] != self.cluster[b] else 0

    # -- dirty bookkeeping ---------------------------------------------

    def _mark_dirty(self, cache: Cache, i: int) -> None:
        if not cache.dirty[i]:
            cache.dirty[i] = 1
            self.counters[C_DIRTY_MARK] += 1
            self.counters[C_DIRTY_LIVE] += 1

    def _write_back(self, cache: Cache, i: int) -> None:
        """Dirty slot gives up its data (evicted, flushed, invalidated, downgraded)."""
        cache.dirty[i] = 0
        self.counters[C_WB] += 1
        self.counters[C_DIRTY_LIVE] -= 1

    # -- L2 ------------------------------------------------------------

    def _l2_fill(self, line: int, dirty: bool) -> None:
        l2 = self.l2
        i = l2.victim(line % l2.sets)
        if l2.line[i] >= 0:
            self._evict_l2(i)
        l2.install(i, line)
        if dirty:
            self._mark_dirty(l2, i)

    def _evict_l2(self, i: int) -> None:
        line = self.l2.line[i]
        for cache in self.l1:
            j = cache.find(line)
            if j >= 0 and not cache.locked[j]:
                if cache.dirty[j]:
                    self._write_back(cache, j)
                cache.clear(j)
        if self.l2.dirty[i]:
            self._write_back(self.l2, i)
        self.l2.clear(i)

    def _l2_receive(self, line: int) -> None:
        """Dirty data written back from an L1."""
        j = self.l2.find(line)
        if j >= 0:
            self._mark_dirty(self.l2, j)
        else:
            self._l2_fill(line, True)

    # -- L1 ------------------------------------------------------------

    def _evict_l1(self, c: int, i: int) -> None:
        cache = self.l1[c]
        k = self.counters
        k[C_L1_EVICT] += 1
        if cache.locked[i]:
            k[C_LOCKED_EVICT] += 1
        line = cache.line[i]
        self.last_evicted = Eviction(i // cache.ways, line // cache.sets, bool(cache.dirty[i]))
        if cache.dirty[i]:
            self._write_back(cache, i)
            self._l2_receive(line)
        cache.clear(i)

    def _l1_fill(self, c: int, line: int) -> int:
        cache = self.l1[c]
        i = cache.victim(line % cache.sets)
        if i == UNCACHED_WAY:
            self.counters[C_UNCACHED] += 1
            return UNCACHED_WAY
        if cache.line[i] >= 0:
            self._evict_l1(c, i)
        cache.install(i, line, transient=self._is_transient(line))
        return i

    def _rf_target(self, c: int, line: int) -> int:
        k = self.rf_rng[c].below(self.sec.rf_size)
        off = k - self.sec.window_start
        span = self.region_hi - self.region_lo
        if span > 0 and self.in_region(line):
            return self.region_lo + (line - self.region_lo + off) % span
        return max(0, line + off)

    def _rf_in_window(self, line: int, fetched: int) -> bool:
        span = self.region_hi - self.region_lo
        if span > 0 and self.in_region(line):
            d = (fetched - line + self.sec.window_start) % span
        else:
            d = fetched - line + self.sec.window_start
        return 0 <= d < self.sec.rf_size

    def _miss(self, c: int, line: int) -> tuple:
        """Service an L1 miss on core c.  Returns (latency, slot or -1)."""
        lat, k, l2 = self.lat, self.counters, self.l2
        self.wb[c].clear()
        k[C_L1_MISS] += 1
        self.mshr += 1
        extra = 0
        if self.mshr > self.tog.mshr_size:
            extra = lat.t_dram // 2
            k[C_MSHR] += 1
        holder = -1
        dirty_holder = -1
        for h in range(self.n_cores):
            if h == c:
                continue
            j = self.l1[h].find(line)
            if j >= 0:
                if holder < 0:
                    holder = h
                if self.l1[h].dirty[j]:
                    dirty_holder = h
                    self._write_back(self.l1[h], j)
                    self._l2_receive(line)
                    break
        j2 = l2.find(line)
        if dirty_holder >= 0:
            base = lat.t_L2 + self._cross(c, dirty_holder)
            l2.touch(j2)
            self.last_level = L2_HIT
            k[C_L2_HIT] += 1
        elif j2 >= 0:
            base = lat.t_L2
            l2.touch(j2)
            self.last_level = L2_HIT
            k[C_L2_HIT] += 1
        elif holder >= 0:
            base = lat.t_L2 + self._cross(c, holder)
            self.last_level = L2_HIT
            k[C_L2_HIT] += 1
        else:
            base = lat.t_dram
            self.last_level = DRAM_FILL
            k[C_DRAM] += 1
        rf = self.sec.kind == "rf"
        if j2 < 0 and dirty_holder < 0 and not self._is_transient(line) \
                and not (rf and self.sec.rf_l2_fill == "random"):
            self._l2_fill(line, False)
        if rf:
            fetched = self._rf_target(c, line)
            k[C_RF_FETCH] += 1
            if not self._rf_in_window(line, fetched):
                k[C_RF_WINDOW] += 1
            cache = self.l1[c]
            slot = cache.find(fetched)
            if slot < 0:
                if l2.find(fetched) < 0 and not self._is_transient(fetched):
                    self._l2_fill(fetched, False)
                slot = self._l1_fill(c, fetched)
            if fetched != line:
                if cache.find(line) >= 0:
                    k[C_RF_DEMAND] += 1
                slot = UNCACHED_WAY
            return base + extra, slot
        slot = self._l1_fill(c, line)
        if slot == UNCACHED_WAY:
            self.last_level = UNCACHED
        return base + extra, slot

    def _invalidate_holders(self, c: int, line: int) -> tuple:
        """Invalidate every other core's copy.  Returns (found, any_dirty, cross)."""
        found = dirty = False
        cross = 0
        for h in range(self.n_cores):
            if h == c:
                continue
            cache = self.l1[h]
            j = cache.find(line)
            if j < 0:
                continue
            found = True
            cross = max(cross, self._cross(c, h))
            if cache.dirty[j]:
                dirty = True
                self._write_back(cache, j)
                self._l2_receive(line)
            if not cache.locked[j]:
                cache.clear(j)
                self.counters[C_COHERENCE] += 1
        for h in range(self.n_cores):
            if h != c and line in self.wb[h]:
                self.wb[h].remove(line)
        return found, dirty, cross

    def _wb_push(self, c: int, line: int) -> None:
        size = self.tog.write_buffer_size
        if size == 0:
            return
        q = self.wb[c]
        if line in q:
            q.remove(line)
        elif len(q) == size:
            q.pop(0)
        q.append(line)

    # -- micro-ops -----------------------------------------------------

    def read(self, c: int, line: int) -> int:
        self.last_evicted = None
        if line in self.wb[c]:
            self.counters[C_WB_HIT] += 1
            self.last_level = WB_HIT
            return self.lat.t_wb_hit
        cache = self.l1[c]
        i = cache.find(line)
        if i >= 0:
            cache.touch(i)
            self.counters[C_L1_HIT] += 1
            self.last_level = L1_HIT
            return self.lat.t_L1
        return self._miss(c, line)[0]

    def write(self, c: int, line: int) -> int:
        self.last_evicted = None
        lat = self.lat
        found, dirty, cross = self._invalidate_holders(c, line)
        inv = 0
        if found:
            inv = (lat.inv_remote_dirty_L1 if dirty else lat.inv_remote_clean_L1) + cross
        cache = self.l1[c]
        i = cache.find(line)
        if i >= 0:
            cache.touch(i)
            self.counters[C_L1_HIT] += 1
            self.last_level = L1_HIT
            t = lat.t_L1
            if self.tog.store_buffer and not cache.dirty[i]:
                t += lat.store_buffer_delta
            self._mark_dirty(cache, i)
        else:
            t, slot = self._miss(c, line)
            if slot >= 0:
                self._mark_dirty(cache, slot)
            else:
                j2 = self.l2.find(line)
                if j2 >= 0:
                    self._mark_dirty(self.l2, j2)
        self._wb_push(c, line)
        return max(t, inv)

    def flush(self, c: int, line: int) -> int:
        self.last_evicted = None
        lat, k, l2 = self.lat, self.counters, self.l2
        k[C_FLUSH] += 1
        in_l1 = False
        kept = False
        for cache in self.l1:
            j = cache.find(line)
            if j < 0:
                continue
            in_l1 = True
            if cache.dirty[j]:
                self._write_back(cache, j)
            if cache.locked[j]:
                kept = True
            else:
                cache.clear(j)
        j2 = l2.find(line)
        if in_l1:
            t = lat.flush_L1
        elif j2 >= 0:
            t = lat.flush_L1 if self.tog.scu else lat.flush_L2
        else:
            t = lat.flush_miss
        if j2 >= 0:
            if l2.dirty[j2]:
                self._write_back(l2, j2)
            if not kept:
                l2.clear(j2)
        for q in self.wb:
            while line in q:
                q.remove(line)
        return t

    def remote_inv(self, line: int, from_core: int) -> int:
        self.last_evicted = None
        lat = self.lat
        self.counters[C_RINV] += 1
        found, dirty, cross = self._invalidate_holders(from_core, line)
        if found:
            return (lat.inv_remote_dirty_L1 if dirty else lat.inv_remote_clean_L1) + cross
        j2 = self.l2.find(line)
        if j2 < 0:
            return lat.flush_miss
        if self.tog.scu:
            return lat.inv_remote_dirty_L1 if self.l2.dirty[j2] else lat.inv_remote_clean_L1
        return lat.inv_remote_L2

    def lock(self, c: int, line: int) -> None:
        if self.sec.kind != "pl":
            raise ConfigError("lock requires the PL secure cache")
        cache = self.l1[c]
        i = cache.find(line)
        if i < 0:
            if self.l2.find(line) < 0 and not self._is_transient(line):
                self._l2_fill(line, False)
            try:
                i = cache.lock_victim(line % cache.sets)
            except LockError as exc:
                raise ConfigError(str(exc)) from exc
            if cache.line[i] >= 0:
                self._evict_l1(c, i)
            cache.install(i, line, transient=self._is_transient(line))
        cache.locked[i] = 1
        self.lock_dir.add((c, line))

    def unlock(self, c: int, line: int) -> None:
        cache = self.l1[c]
        i = cache.find(line)
        if i >= 0:
            cache.locked[i] = 0
        self.lock_dir.discard((c, line))

    # -- byte-address API ----------------------------------------------

    def _line(self, addr: int) -> int:
        return addr // self.cfg.line_size

    def access(self, core: int, op_kind: str, addr: int) -> AccessOutcome:
        line = self._line(addr)
        t = self.write(core, line) if op_kind == "write" else self.read(core, line)
        return AccessOutcome(self.last_level, t, self.last_evicted)

    def flush_line(self, addr: int, core: int = 0) -> int:
        return self.flush(core, self._line(addr))

    def remote_invalidate(self, addr: int, from_core: int) -> int:
        return self.remote_inv(self._line(addr), from_core)

    def pl_lock(self, addr: int, core: int = 0) -> None:
        self.lock(core, self._line(addr))

    def pl_unlock(self, addr: int, core: int = 0) -> None:
        self.unlock(core, self._line(addr))

    def rf_fill(self, miss_addr: int, core: int = 0) -> int:
        """Line address the RF window would fetch for a miss at ``miss_addr`` (draws once)."""
        line = self._line(miss_addr)
        return self._rf_target(core, line) * self.cfg.line_size

    def resident(self, core: int, addr: int) -> bool:
        return self.l1[core].find(self._line(addr)) >= 0

    def in_l2(self, addr: int) -> bool:
        return self.l2.find(self._line(addr)) >= 0

    def dump(self) -> dict:
        return {
            "l1": {str(c): cache.dump() for c, cache in enumerate(self.l1)},
            "l2": self.l2.dump(),
            "write_buffers": {str(c): list(q) for c, q in enumerate(self.wb)},
            "counters": self.counter_dict(),
        }

    # -- program execution ---------------------------------------------

    def exec_op(self, op: int, c: int, line: int) -> int:
        if op == OP_READ:
            return self.read(c, line)
        if op == OP_WRITE:
            return self.write(c, line)
        if op == OP_FLUSH:
            return self.flush(c, line)
        if op == OP_RINV:
            return self.remote_inv(line, c)
        if op == OP_LOCK:
            self.lock(c, line)
            return 0
        if op == OP_UNLOCK:
            self.unlock(c, line)
            return 0
        raise ValueError(f"bad opcode {op}")

    def run_trial(self, ops: list, steps: list) -> int:
        self.reset()
        timed = 0
        k = self.counters
        for start, end, repeat, is_timed in steps:
            self.mshr = 0
            body = ops[start:end]
            if is_timed:
                for op, c, line in body:
                    timed += self.exec_op(op, c, line)
            elif repeat:
                # Extra passes only change state while they still miss or
                # invalidate, so stopping at the first quiet pass is the
                # same as running all of them.
                for _ in range(PRIME_REPEATS):
                    before = k[C_L1_MISS] + k[C_COHERENCE]
                    for op, c, line in body:
                        self.exec_op(op, c, line)
                    if k[C_L1_MISS] + k[C_COHERENCE] == before:
                        break
            else:
                for op, c, line in body:
                    self.exec_op(op, c, line)
        return timed

    def run_program(self, program: Program, n_trials: int, seed: int,
                    sigma: float | None = None) -> tuple:
        """Run ``n_trials`` resets+executions; returns (samples, counters).

        Samples are the timed step's latency plus Gaussian noise, floored at 1.
        """
        sigma = self.cfg.noise.sigma if sigma is None else sigma
        self.reseed(seed)
        self.counters = [0] * len(COUNTERS)
        self.region_lo, self.region_hi = program.region_lo, program.region_hi
        ops = program.ops.tolist()
        steps = program.steps.tolist()
        out = np.empty(n_trials, dtype=np.float64)
        for t in range(n_trials):
            v = float(self.run_trial(ops, steps))
            if sigma > 0:
                v = max(1.0, v + sigma * gauss(self.noise_rng))
            out[t] = v
        self.reset()
        return out, self.counter_dict()
