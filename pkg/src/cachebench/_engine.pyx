# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of Machine.run_program.

Same slot layout, same lazy set epochs, same order of random draws and the
same counters as the Python engine in machine.py.
"""

from libc.stdint cimport int64_t, uint64_t, uint8_t
from libc.stdlib cimport calloc, free
from libc.math cimport sqrt, log, cos

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef int64_t FILLER_LINE = 1LL << 34
cdef int PRIME_REPEATS = 10
cdef double INV53 = 1.0 / 9007199254740992.0
cdef double TAU = 6.283185307179586

# counter indices, same order as machine.COUNTERS
DEF C_L1_HIT = 0
DEF C_L1_MISS = 1
DEF C_L2_HIT = 2
DEF C_DRAM = 3
DEF C_WB_HIT = 4
DEF C_UNCACHED = 5
DEF C_WB = 6
DEF C_DIRTY_MARK = 7
DEF C_DIRTY_DROP = 8
DEF C_DIRTY_LIVE = 9
DEF C_LOCKED_EVICT = 10
DEF C_L1_EVICT = 11
DEF C_RF_FETCH = 12
DEF C_RF_WINDOW = 13
DEF C_RF_DEMAND = 14
DEF C_COHERENCE = 15
DEF C_MSHR = 16
DEF C_FLUSH = 17
DEF C_RINV = 18
DEF N_COUNTERS = 19

DEF OP_READ = 0
DEF OP_WRITE = 1
DEF OP_FLUSH = 2
DEF OP_RINV = 3
DEF OP_LOCK = 4
DEF OP_UNLOCK = 5


cdef struct Cch:
    int64_t sets
    int64_t ways
    int random
    int pl
    int warm
    int64_t *line
    int64_t *stamp
    int64_t *epoch
    uint8_t *dirty
    uint8_t *locked
    uint8_t *transient
    int64_t cur_epoch
    int64_t clock
    uint64_t rng


cdef inline uint64_t xs_next(uint64_t *state):
    cdef uint64_t x = state[0]
    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    state[0] = x
    return x * 0x2545F4914F6CDD1DULL


cdef inline int64_t xs_below(uint64_t *state, int64_t n):
    return <int64_t>(((xs_next(state) >> 32) * <uint64_t>n) >> 32)


cdef inline double xs_gauss(uint64_t *state):
    cdef double u1 = <double>((xs_next(state) >> 11) + 1) * INV53
    cdef double u2 = <double>(xs_next(state) >> 11) * INV53
    return sqrt(-2.0 * log(u1)) * cos(TAU * u2)


cdef int cache_alloc(Cch *c, int64_t sets, int64_t ways, int random, int pl, int warm):
    cdef int64_t n = sets * ways
    c.sets = sets
    c.ways = ways
    c.random = random
    c.pl = pl
    c.warm = warm
    c.line = <int64_t*>calloc(n, sizeof(int64_t))
    c.stamp = <int64_t*>calloc(n, sizeof(int64_t))
    c.epoch = <int64_t*>calloc(sets, sizeof(int64_t))
    c.dirty = <uint8_t*>calloc(n, 1)
    c.locked = <uint8_t*>calloc(n, 1)
    c.transient = <uint8_t*>calloc(n, 1)
    c.cur_epoch = 1
    c.clock = 0
    c.rng = 1
    if not (c.line and c.stamp and c.epoch and c.dirty and c.locked and c.transient):
        return -1
    return 0


cdef void cache_free(Cch *c):
    free(c.line)
    free(c.stamp)
    free(c.epoch)
    free(c.dirty)
    free(c.locked)
    free(c.transient)


cdef inline void prep(Cch *c, int64_t s):
    cdef int64_t w, i, base
    if c.epoch[s] == c.cur_epoch:
        return
    base = s * c.ways
    for w in range(c.ways):
        i = base + w
        if c.warm:
            c.line[i] = FILLER_LINE + w * c.sets + s
        else:
            c.line[i] = -1
        c.dirty[i] = 0
        c.locked[i] = 0
        c.transient[i] = 0
        c.stamp[i] = 0
    c.epoch[s] = c.cur_epoch


cdef inline int64_t cfind(Cch *c, int64_t line):
    cdef int64_t s = line % c.sets
    cdef int64_t i, base
    prep(c, s)
    base = s * c.ways
    for i in range(base, base + c.ways):
        if c.line[i] == line:
            return i
    return -1


cdef inline void ctouch(Cch *c, int64_t i):
    c.clock += 1
    c.stamp[i] = c.clock


cdef inline int64_t cvictim(Cch *c, int64_t s):
    cdef int64_t base, i, j
    prep(c, s)
    base = s * c.ways
    for i in range(base, base + c.ways):
        if c.line[i] < 0:
            return i
    if c.random:
        i = base + xs_below(&c.rng, c.ways)
    else:
        i = base
        for j in range(base + 1, base + c.ways):
            if c.stamp[j] < c.stamp[i]:
                i = j
    if c.pl and c.locked[i]:
        return -1
    return i


cdef int64_t clock_victim(Cch *c, int64_t s):
    """-2 when every way is locked."""
    cdef int64_t base, i, n_free = 0, k, best = -1
    prep(c, s)
    base = s * c.ways
    for i in range(base, base + c.ways):
        if c.line[i] < 0:
            return i
    for i in range(base, base + c.ways):
        if not c.locked[i]:
            n_free += 1
    if n_free == 0:
        return -2
    if c.random:
        k = xs_below(&c.rng, n_free)
        for i in range(base, base + c.ways):
            if not c.locked[i]:
                if k == 0:
                    return i
                k -= 1
        return -2
    for i in range(base, base + c.ways):
        if not c.locked[i]:
            if best < 0 or c.stamp[i] < c.stamp[best]:
                best = i
    return best


cdef inline void cinstall(Cch *c, int64_t i, int64_t line, int transient):
    c.line[i] = line
    c.dirty[i] = 0
    c.locked[i] = 0
    c.transient[i] = transient
    ctouch(c, i)


cdef inline void cclear(Cch *c, int64_t i):
    c.line[i] = -1
    c.dirty[i] = 0
    c.locked[i] = 0
    c.transient[i] = 0
    c.stamp[i] = 0


class EngineError(RuntimeError):
    pass


cdef class Engine:
    cdef int n_cores
    cdef Cch *l1
    cdef Cch l2
    cdef int64_t *cluster
    cdef uint64_t *rf_rng
    cdef uint64_t noise_rng
    cdef int64_t counters[N_COUNTERS]
    cdef int64_t *wbbuf
    cdef int64_t *wblen
    cdef int64_t wbcap
    cdef int64_t mshr, mshr_size
    cdef int64_t region_lo, region_hi
    # latencies
    cdef int64_t t_L1, t_L2, t_dram, t_wb_hit, flush_L1, flush_L2, flush_miss
    cdef int64_t inv_clean, inv_dirty, inv_L2, cross_pen, sb_delta
    cdef int store_buffer, scu, transient_on
    cdef int secure_kind, rf_random_l2
    cdef int64_t rf_size, rf_start
    cdef double sigma
    cdef int error

    def __cinit__(self):
        self.l1 = NULL
        self.cluster = NULL
        self.rf_rng = NULL
        self.wbbuf = NULL
        self.wblen = NULL
        self.n_cores = 0
        self.l2.line = NULL

    def __init__(self, cfg):
        cdef int i
        lat = cfg.latency
        tog = cfg.toggles
        sec = cfg.secure
        self.n_cores = len(cfg.cores)
        self.l1 = <Cch*>calloc(self.n_cores, sizeof(Cch))
        self.cluster = <int64_t*>calloc(self.n_cores, sizeof(int64_t))
        self.rf_rng = <uint64_t*>calloc(self.n_cores, sizeof(uint64_t))
        self.wbcap = tog.write_buffer_size
        self.wbbuf = <int64_t*>calloc(self.n_cores * (self.wbcap + 1), sizeof(int64_t))
        self.wblen = <int64_t*>calloc(self.n_cores, sizeof(int64_t))
        if not (self.l1 and self.cluster and self.rf_rng and self.wbbuf and self.wblen):
            raise MemoryError()
        pl = 1 if sec.kind == "pl" else 0
        for i, core in enumerate(cfg.cores):
            g = core.l1_geometry
            if cache_alloc(&self.l1[i], g.num_sets, g.associativity,
                           1 if core.l1_policy == "random" else 0, pl, 1 if cfg.warm_reset else 0):
                raise MemoryError()
            self.cluster[i] = 0 if core.cluster == "little" else 1
        g = cfg.l2_geometry
        if cache_alloc(&self.l2, g.num_sets, g.associativity, 0, 0, 0):
            raise MemoryError()
        self.t_L1 = lat.t_L1
        self.t_L2 = lat.t_L2
        self.t_dram = lat.t_dram
        self.t_wb_hit = lat.t_wb_hit
        self.flush_L1 = lat.flush_L1
        self.flush_L2 = lat.flush_L2
        self.flush_miss = lat.flush_miss
        self.inv_clean = lat.inv_remote_clean_L1
        self.inv_dirty = lat.inv_remote_dirty_L1
        self.inv_L2 = lat.inv_remote_L2
        self.cross_pen = lat.cross_cluster_penalty
        self.sb_delta = lat.store_buffer_delta
        self.store_buffer = 1 if tog.store_buffer else 0
        self.scu = 1 if tog.scu else 0
        self.transient_on = 1 if tog.transient_region else 0
        self.mshr_size = tog.mshr_size
        self.secure_kind = {"none": 0, "pl": 1, "rf": 2}[sec.kind]
        self.rf_size = sec.rf_size
        self.rf_start = sec.window_start
        self.rf_random_l2 = 1 if sec.rf_l2_fill == "random" else 0
        self.sigma = cfg.noise.sigma

    def __dealloc__(self):
        cdef int i
        if self.l1 != NULL:
            for i in range(self.n_cores):
                cache_free(&self.l1[i])
            free(self.l1)
        if self.l2.line != NULL:
            cache_free(&self.l2)
        free(self.cluster)
        free(self.rf_rng)
        free(self.wbbuf)
        free(self.wblen)

    # -- helpers -------------------------------------------------------

    cdef inline int in_region(self, int64_t line):
        return self.region_lo <= line < self.region_hi

    cdef inline int is_transient(self, int64_t line):
        return self.transient_on and self.in_region(line)

    cdef inline int64_t cross(self, int a, int b):
        return self.cross_pen if self.cluster[a] != self.cluster[b] else 0

    cdef inline void mark_dirty(self, Cch *c, int64_t i):
        if not c.dirty[i]:
            c.dirty[i] = 1
            self.counters[C_DIRTY_MARK] += 1
            self.counters[C_DIRTY_LIVE] += 1

    cdef inline void write_back(self, Cch *c, int64_t i):
        c.dirty[i] = 0
        self.counters[C_WB] += 1
        self.counters[C_DIRTY_LIVE] -= 1

    cdef void reset(self):
        cdef int i
        for i in range(self.n_cores):
            self.l1[i].cur_epoch += 1
            self.wblen[i] = 0
        self.l2.cur_epoch += 1
        self.counters[C_DIRTY_DROP] += self.counters[C_DIRTY_LIVE]
        self.counters[C_DIRTY_LIVE] = 0
        self.mshr = 0

    # write buffer: per-core list, oldest first

    cdef inline int64_t wb_index(self, int c, int64_t line):
        cdef int64_t *q = self.wbbuf + c * (self.wbcap + 1)
        cdef int64_t k
        for k in range(self.wblen[c]):
            if q[k] == line:
                return k
        return -1

    cdef inline void wb_remove_at(self, int c, int64_t k):
        cdef int64_t *q = self.wbbuf + c * (self.wbcap + 1)
        cdef int64_t j
        for j in range(k, self.wblen[c] - 1):
            q[j] = q[j + 1]
        self.wblen[c] -= 1

    cdef void wb_push(self, int c, int64_t line):
        cdef int64_t *q
        cdef int64_t k
        if self.wbcap == 0:
            return
        q = self.wbbuf + c * (self.wbcap + 1)
        k = self.wb_index(c, line)
        if k >= 0:
            self.wb_remove_at(c, k)
        elif self.wblen[c] == self.wbcap:
            self.wb_remove_at(c, 0)
        q[self.wblen[c]] = line
        self.wblen[c] += 1

    # -- L2 ------------------------------------------------------------

    cdef void l2_fill(self, int64_t line, int dirty):
        cdef int64_t i = cvictim(&self.l2, line % self.l2.sets)
        if self.l2.line[i] >= 0:
            self.evict_l2(i)
        cinstall(&self.l2, i, line, 0)
        if dirty:
            self.mark_dirty(&self.l2, i)

    cdef void evict_l2(self, int64_t i):
        cdef int64_t line = self.l2.line[i]
        cdef int h
        cdef int64_t j
        cdef Cch *c
        for h in range(self.n_cores):
            c = &self.l1[h]
            j = cfind(c, line)
            if j >= 0 and not c.locked[j]:
                if c.dirty[j]:
                    self.write_back(c, j)
                cclear(c, j)
        if self.l2.dirty[i]:
            self.write_back(&self.l2, i)
        cclear(&self.l2, i)

    cdef void l2_receive(self, int64_t line):
        cdef int64_t j = cfind(&self.l2, line)
        if j >= 0:
            self.mark_dirty(&self.l2, j)
        else:
            self.l2_fill(line, 1)

    # -- L1 ------------------------------------------------------------

    cdef void evict_l1(self, int c, int64_t i):
        cdef Cch *cc = &self.l1[c]
        cdef int64_t line = cc.line[i]
        self.counters[C_L1_EVICT] += 1
        if cc.locked[i]:
            self.counters[C_LOCKED_EVICT] += 1
        if cc.dirty[i]:
            self.write_back(cc, i)
            self.l2_receive(line)
        cclear(cc, i)

    cdef int64_t l1_fill(self, int c, int64_t line):
        cdef Cch *cc = &self.l1[c]
        cdef int64_t i = cvictim(cc, line % cc.sets)
        if i < 0:
            self.counters[C_UNCACHED] += 1
            return -1
        if cc.line[i] >= 0:
            self.evict_l1(c, i)
        cinstall(cc, i, line, self.is_transient(line))
        return i

    cdef int64_t rf_target(self, int c, int64_t line):
        cdef int64_t k = xs_below(&self.rf_rng[c], self.rf_size)
        cdef int64_t off = k - self.rf_start
        cdef int64_t span = self.region_hi - self.region_lo
        cdef int64_t v
        if span > 0 and self.in_region(line):
            v = (line - self.region_lo + off) % span
            if v < 0:
                v += span
            return self.region_lo + v
        v = line + off
        return v if v > 0 else 0

    cdef int rf_in_window(self, int64_t line, int64_t fetched):
        cdef int64_t span = self.region_hi - self.region_lo
        cdef int64_t d
        if span > 0 and self.in_region(line):
            d = (fetched - line + self.rf_start) % span
            if d < 0:
                d += span
        else:
            d = fetched - line + self.rf_start
        return 0 <= d < self.rf_size

    cdef int64_t miss(self, int c, int64_t line, int64_t *slot_out):
        cdef int64_t extra = 0, base, j, j2, slot, fetched
        cdef int h, holder = -1, dirty_holder = -1
        cdef Cch *cc = &self.l1[c]
        self.wblen[c] = 0
        self.counters[C_L1_MISS] += 1
        self.mshr += 1
        if self.mshr > self.mshr_size:
            extra = self.t_dram // 2
            self.counters[C_MSHR] += 1
        for h in range(self.n_cores):
            if h == c:
                continue
            j = cfind(&self.l1[h], line)
            if j >= 0:
                if holder < 0:
                    holder = h
                if self.l1[h].dirty[j]:
                    dirty_holder = h
                    self.write_back(&self.l1[h], j)
                    self.l2_receive(line)
                    break
        j2 = cfind(&self.l2, line)
        if dirty_holder >= 0:
            base = self.t_L2 + self.cross(c, dirty_holder)
            ctouch(&self.l2, j2)
            self.counters[C_L2_HIT] += 1
        elif j2 >= 0:
            base = self.t_L2
            ctouch(&self.l2, j2)
            self.counters[C_L2_HIT] += 1
        elif holder >= 0:
            base = self.t_L2 + self.cross(c, holder)
            self.counters[C_L2_HIT] += 1
        else:
            base = self.t_dram
            self.counters[C_DRAM] += 1
        if j2 < 0 and dirty_holder < 0 and not self.is_transient(line) \
                and not (self.secure_kind == 2 and self.rf_random_l2):
            self.l2_fill(line, 0)
        if self.secure_kind == 2:
            fetched = self.rf_target(c, line)
            self.counters[C_RF_FETCH] += 1
            if not self.rf_in_window(line, fetched):
                self.counters[C_RF_WINDOW] += 1
            slot = cfind(cc, fetched)
            if slot < 0:
                if cfind(&self.l2, fetched) < 0 and not self.is_transient(fetched):
                    self.l2_fill(fetched, 0)
                slot = self.l1_fill(c, fetched)
            if fetched != line:
                if cfind(cc, line) >= 0:
                    self.counters[C_RF_DEMAND] += 1
                slot = -1
            slot_out[0] = slot
            return base + extra
        slot_out[0] = self.l1_fill(c, line)
        return base + extra

    cdef void invalidate_holders(self, int c, int64_t line, int *found, int *dirty, int64_t *crossp):
        cdef int h
        cdef int64_t j, k
        cdef Cch *cc
        found[0] = 0
        dirty[0] = 0
        crossp[0] = 0
        for h in range(self.n_cores):
            if h == c:
                continue
            cc = &self.l1[h]
            j = cfind(cc, line)
            if j < 0:
                continue
            found[0] = 1
            if self.cross(c, h) > crossp[0]:
                crossp[0] = self.cross(c, h)
            if cc.dirty[j]:
                dirty[0] = 1
                self.write_back(cc, j)
                self.l2_receive(line)
            if not cc.locked[j]:
                cclear(cc, j)
                self.counters[C_COHERENCE] += 1
        for h in range(self.n_cores):
            if h != c:
                k = self.wb_index(h, line)
                if k >= 0:
                    self.wb_remove_at(h, k)

    # -- micro-ops -----------------------------------------------------

    cdef int64_t op_read(self, int c, int64_t line):
        cdef Cch *cc
        cdef int64_t i, slot
        if self.wb_index(c, line) >= 0:
            self.counters[C_WB_HIT] += 1
            return self.t_wb_hit
        cc = &self.l1[c]
        i = cfind(cc, line)
        if i >= 0:
            ctouch(cc, i)
            self.counters[C_L1_HIT] += 1
            return self.t_L1
        return self.miss(c, line, &slot)

    cdef int64_t op_write(self, int c, int64_t line):
        cdef int found, dirty
        cdef int64_t crs, inv = 0, t, i, slot, j2
        cdef Cch *cc = &self.l1[c]
        self.invalidate_holders(c, line, &found, &dirty, &crs)
        if found:
            inv = (self.inv_dirty if dirty else self.inv_clean) + crs
        i = cfind(cc, line)
        if i >= 0:
            ctouch(cc, i)
            self.counters[C_L1_HIT] += 1
            t = self.t_L1
            if self.store_buffer and not cc.dirty[i]:
                t += self.sb_delta
            self.mark_dirty(cc, i)
        else:
            t = self.miss(c, line, &slot)
            if slot >= 0:
                self.mark_dirty(cc, slot)
            else:
                j2 = cfind(&self.l2, line)
                if j2 >= 0:
                    self.mark_dirty(&self.l2, j2)
        self.wb_push(c, line)
        return t if t > inv else inv

    cdef int64_t op_flush(self, int c, int64_t line):
        cdef int h, in_l1 = 0, kept = 0
        cdef int64_t j, j2, t, k
        cdef Cch *cc
        self.counters[C_FLUSH] += 1
        for h in range(self.n_cores):
            cc = &self.l1[h]
            j = cfind(cc, line)
            if j < 0:
                continue
            in_l1 = 1
            if cc.dirty[j]:
                self.write_back(cc, j)
            if cc.locked[j]:
                kept = 1
            else:
                cclear(cc, j)
        j2 = cfind(&self.l2, line)
        if in_l1:
            t = self.flush_L1
        elif j2 >= 0:
            t = self.flush_L1 if self.scu else self.flush_L2
        else:
            t = self.flush_miss
        if j2 >= 0:
            if self.l2.dirty[j2]:
                self.write_back(&self.l2, j2)
            if not kept:
                cclear(&self.l2, j2)
        for h in range(self.n_cores):
            k = self.wb_index(h, line)
            while k >= 0:
                self.wb_remove_at(h, k)
                k = self.wb_index(h, line)
        return t

    cdef int64_t op_rinv(self, int64_t line, int from_core):
        cdef int found, dirty
        cdef int64_t crs, j2
        self.counters[C_RINV] += 1
        self.invalidate_holders(from_core, line, &found, &dirty, &crs)
        if found:
            return (self.inv_dirty if dirty else self.inv_clean) + crs
        j2 = cfind(&self.l2, line)
        if j2 < 0:
            return self.flush_miss
        if self.scu:
            return self.inv_dirty if self.l2.dirty[j2] else self.inv_clean
        return self.inv_L2

    cdef int op_lock(self, int c, int64_t line):
        cdef Cch *cc = &self.l1[c]
        cdef int64_t i
        if self.secure_kind != 1:
            return -1
        i = cfind(cc, line)
        if i < 0:
            if cfind(&self.l2, line) < 0 and not self.is_transient(line):
                self.l2_fill(line, 0)
            i = clock_victim(cc, line % cc.sets)
            if i < 0:
                return -2
            if cc.line[i] >= 0:
                self.evict_l1(c, i)
            cinstall(cc, i, line, self.is_transient(line))
        cc.locked[i] = 1
        return 0

    cdef void op_unlock(self, int c, int64_t line):
        cdef int64_t i = cfind(&self.l1[c], line)
        if i >= 0:
            self.l1[c].locked[i] = 0

    cdef int64_t exec_op(self, int64_t op, int c, int64_t line):
        cdef int rc
        if op == OP_READ:
            return self.op_read(c, line)
        if op == OP_WRITE:
            return self.op_write(c, line)
        if op == OP_FLUSH:
            return self.op_flush(c, line)
        if op == OP_RINV:
            return self.op_rinv(line, c)
        if op == OP_LOCK:
            rc = self.op_lock(c, line)
            if rc < 0:
                self.error = -rc
            return 0
        if op == OP_UNLOCK:
            self.op_unlock(c, line)
            return 0
        self.error = 3
        return 0

    cdef int64_t run_trial(self, const int64_t[:, ::1] ops, const int64_t[:, ::1] steps):
        cdef Py_ssize_t s, k
        cdef int64_t timed = 0, before
        cdef int p
        self.reset()
        for s in range(steps.shape[0]):
            self.mshr = 0
            if steps[s, 3]:
                for k in range(steps[s, 0], steps[s, 1]):
                    timed += self.exec_op(ops[k, 0], <int>ops[k, 1], ops[k, 2])
            elif steps[s, 2]:
                for p in range(PRIME_REPEATS):
                    before = self.counters[C_L1_MISS] + self.counters[C_COHERENCE]
                    for k in range(steps[s, 0], steps[s, 1]):
                        self.exec_op(ops[k, 0], <int>ops[k, 1], ops[k, 2])
                    if self.counters[C_L1_MISS] + self.counters[C_COHERENCE] == before:
                        break
            else:
                for k in range(steps[s, 0], steps[s, 1]):
                    self.exec_op(ops[k, 0], <int>ops[k, 1], ops[k, 2])
        return timed

    def run(self, ops, steps, int64_t region_lo, int64_t region_hi, int64_t n_trials,
            seeds, sigma=None):
        """seeds: (l1 seeds per core, l2 seed, rf seeds per core, noise seed)."""
        cdef const int64_t[:, ::1] o = np.ascontiguousarray(ops, dtype=np.int64)
        cdef const int64_t[:, ::1] st = np.ascontiguousarray(steps, dtype=np.int64)
        cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n_trials, dtype=np.float64)
        cdef double sg = self.sigma if sigma is None else sigma
        cdef double v
        cdef int64_t t
        cdef int i
        l1_seeds, l2_seed, rf_seeds, noise_seed = seeds
        for i in range(self.n_cores):
            self.l1[i].rng = l1_seeds[i]
            self.rf_rng[i] = rf_seeds[i]
        self.l2.rng = l2_seed
        self.noise_rng = noise_seed
        for i in range(N_COUNTERS):
            self.counters[i] = 0
        self.region_lo = region_lo
        self.region_hi = region_hi
        self.error = 0
        for t in range(n_trials):
            v = <double>self.run_trial(o, st)
            if self.error:
                break
            if sg > 0:
                v = v + sg * xs_gauss(&self.noise_rng)
                if v < 1.0:
                    v = 1.0
            out[t] = v
        self.reset()
        if self.error == 1:
            raise EngineError("lock requires the PL secure cache")
        if self.error == 2:
            raise EngineError("every way of a set is already locked")
        if self.error:
            raise EngineError("bad opcode")
        return out, [self.counters[i] for i in range(N_COUNTERS)]
