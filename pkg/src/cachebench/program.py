"""Benchmark address generation and compilation of a case into micro-ops.

A compiled :class:`Program` is what both engines execute: a flat op table
(opcode, core, line) plus a step table (start, end, repeat, timed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cache import build_eviction_set
from .config import ConfigError, MachineConfig
from .geometry import CacheGeometry
from .patterns import (ATTACKER, FLUSH, MULTI_THREADED, READ, REMOTE_WRITE, VICTIM, WRITE,
                       ConcreteCase)

OP_READ, OP_WRITE, OP_FLUSH, OP_RINV, OP_LOCK, OP_UNLOCK = range(6)
OPCODES = {READ: OP_READ, WRITE: OP_WRITE, FLUSH: OP_FLUSH, REMOTE_WRITE: OP_RINV}
OP_NAMES = ("read", "write", "flush", "remote_write", "lock", "unlock")

# Byte base of the benchmark array: a multiple of every way size in use,
# including the non power-of-two 96 KB bench geometry (3 * 2**13 per way).
BENCH_BASE = 3 << 32
DEFAULT_REP = 8


class Untestable(Exception):
    """The case needs an eviction set but the bench geometry is direct-mapped."""


@dataclass(frozen=True)
class Layout:
    """Addresses a benchmark believing ``geometry`` would use, per primed set r < rep."""

    geometry: CacheGeometry
    rep: int
    a: tuple
    alias: tuple
    evset: tuple
    nib: tuple
    known_nib: tuple

    def candidate(self, name: str) -> tuple:
        return {"a": self.a, "alias": self.alias, "nib": self.nib}[name]

    def evset_flat(self) -> list:
        return [addr for group in self.evset for addr in group]

    def all_addresses(self) -> list:
        return list(self.a) + list(self.alias) + self.evset_flat() + list(self.nib) + list(self.known_nib)


def make_layout(geometry: CacheGeometry, rep: int = DEFAULT_REP, base: int = BENCH_BASE) -> Layout:
    """a_r is r lines past the base; a_alias_r one way-size further; the eviction
    set holds the next associativity-1 way-size steps; the NIB candidate sits rep
    lines past a_r and the attacker's own NIB address 2*rep lines past it."""
    if rep < 1:
        raise ConfigError("rep must be >= 1")
    g = geometry
    way = g.way_size
    if base % way:
        raise ConfigError(f"benchmark base is not aligned to the {way} B way size")
    a = tuple(base + r * g.line_size for r in range(rep))
    alias = tuple(x + way for x in a)
    evset = tuple(
        tuple(build_eviction_set((addr // g.line_size) % g.num_sets, g, base=base + way,
                                 protected=(addr, addr + way)))
        for addr in a
    )
    nib = tuple(x + rep * g.line_size for x in a)
    known = tuple(x + 2 * rep * g.line_size for x in a)
    return Layout(g, rep, a, alias, evset, nib, known)


@dataclass
class Program:
    ops: np.ndarray        # (n, 3) int64: opcode, core, line
    steps: np.ndarray      # (m, 4) int64: start, end, repeat, timed
    region_lo: int
    region_hi: int
    layout: Layout | None = None
    cores: tuple = ()
    candidate: str = ""

    def describe(self) -> list:
        out = []
        for start, end, rep, timed in self.steps.tolist():
            out.append([(OP_NAMES[o], c, l) for o, c, l in self.ops[start:end].tolist()]
                       + (["timed"] if timed else []) + (["repeat"] if rep else []))
        return out


def bind_cores(cfg: MachineConfig, local_cluster: str, remote_cluster: str) -> tuple:
    """(local, sibling, remote) core ids for one cluster binding."""
    local_cores = cfg.cluster_cores(local_cluster)
    if len(local_cores) < 2:
        raise ConfigError(f"cluster {local_cluster!r} needs at least two cores")
    if remote_cluster == local_cluster:
        if len(local_cores) < 3:
            raise ConfigError(f"cluster {local_cluster!r} needs a third core to act as remote")
        remote = local_cores[2]
    else:
        others = cfg.cluster_cores(remote_cluster)
        if not others:
            raise ConfigError(f"no core in cluster {remote_cluster!r}")
        remote = others[0]
    return local_cores[0], local_cores[1], remote


def bench_geometry_for(case: ConcreteCase, cfg: MachineConfig) -> CacheGeometry:
    """Steps 1 and 2 both on the remote core -> remote L1 geometry, else local."""
    local, _, remote = bind_cores(cfg, case.local_cluster, case.remote_cluster)
    core = remote if case.is_remote(0) and case.is_remote(1) else local
    return cfg.cores[core].l1_geometry


def step_addresses(target: str, layout: Layout, candidate: str) -> list:
    if target in ("u", "inv_u"):
        return list(layout.candidate(candidate))
    if target in ("a", "inv_a"):
        return list(layout.a)
    if target in ("alias", "inv_alias"):
        return layout.evset_flat()
    if target in ("nib", "inv_nib"):
        return list(layout.known_nib)
    if target == "inv_all":
        return layout.all_addresses()
    raise ConfigError(f"unresolvable address class {target!r}")


def compile_case(case: ConcreteCase, candidate: str, cfg: MachineConfig,
                 bench_geometry: CacheGeometry | None = None, rep: int = DEFAULT_REP) -> Program:
    if candidate not in ("a", "alias", "nib"):
        raise ConfigError(f"secret candidate must be a, alias or nib, not {candidate!r}")
    local, sibling, remote = bind_cores(cfg, case.local_cluster, case.remote_cluster)
    geom = bench_geometry or bench_geometry_for(case, cfg)
    layout = make_layout(geom.loose(), rep)
    if not layout.evset[0] and any(s.uses_alias for s in case.steps if not s.is_star):
        raise Untestable(f"{case.case_id}: direct-mapped bench geometry leaves no eviction set")

    line_d = cfg.line_size
    ops, steps = [], []

    def add_step(entries, repeat, timed):
        start = len(ops)
        ops.extend(entries)
        steps.append((start, len(ops), int(repeat), int(timed)))

    if cfg.secure.kind == "pl" and case.lock_prelude:
        seen = []
        for addr in layout.a + layout.alias + layout.nib:
            line = addr // line_d
            if line not in seen:
                seen.append(line)
        add_step([(OP_LOCK, local, line) for line in seen], False, False)

    for i, (step, kind) in enumerate(zip(case.steps, case.op_kinds)):
        if step.is_star:
            add_step([], False, i == 2)
            continue
        if kind == REMOTE_WRITE:
            core = remote
        elif step.actor == VICTIM or case.scheduling != MULTI_THREADED:
            core = local
        else:
            core = sibling
        code = OPCODES[kind]
        entries = [(code, core, addr // line_d) for addr in step_addresses(step.target, layout, candidate)]
        repeat = step.target == "alias" and i < 2
        add_step(entries, repeat, i == 2)

    lines = [addr // line_d for addr in layout.all_addresses()]
    return Program(
        ops=np.asarray(ops, dtype=np.int64).reshape(-1, 3),
        steps=np.asarray(steps, dtype=np.int64).reshape(-1, 4),
        region_lo=min(lines),
        region_hi=max(lines) + 1,
        layout=layout,
        cores=(local, sibling, remote),
        candidate=candidate,
    )


def actor_core(case: ConcreteCase, step_index: int, cores: tuple) -> int:
    local, sibling, remote = cores
    step = case.steps[step_index]
    if case.op_kinds[step_index] == REMOTE_WRITE:
        return remote
    if step.actor == ATTACKER and case.scheduling == MULTI_THREADED:
        return sibling
    return local
