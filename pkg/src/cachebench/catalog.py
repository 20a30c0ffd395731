"""Vulnerability catalog: case expansion, oracle classification, enumeration, persistence.

Labels come from the noise-free oracle.  ``ideal_timing`` runs each secret
candidate with sigma = 0 and common random numbers (same seed for all three
candidates), averaging over replicates when the machine has random elements.
The partition of {a, alias, nib} by timing gives the type:

* all equal                 -> not a vulnerability
* {a} | {alias, nib}        -> AO
* {a, alias} | {nib}        -> SO
* {alias} | {a, nib}        -> SO
* all distinct              -> SA

A pattern's label is the most informative label among its single-core cases
(SA before AO before SO); every case also keeps its own label.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .config import MachineConfig, default_machine
from .engine import run_program
from .geometry import CacheGeometry
from .patterns import (ATTACKER, CANDIDATES, MULTI_THREADED, REMOTE_WRITE, STAR_OP, TIME_SLICED,
                       TYPES, VICTIM, ConcreteCase, PatternError, StepOp, VulnPattern,
                       interference_of, op_variants, steps_key, vocabulary)
from .program import Untestable, compile_case

CATALOG_VERSION = 1
TYPE_RANK = {"SA": 3, "AO": 2, "SO": 1, None: 0}
EQ_TOL = 0.5  # cycles; ideal means closer than this are indistinguishable
BINDINGS = (("little", "little"), ("little", "big"), ("big", "little"), ("big", "big"))
DATA_DIR = Path(__file__).resolve().parent / "data"
DEFAULT_CATALOG = DATA_DIR / "catalog.json"


class CatalogError(ValueError):
    """Schema or content violation in a catalog file (CLI exit code 3)."""


# -- expansion -----------------------------------------------------------

def schedules_for(steps, kinds) -> tuple:
    """Time-sliced always; multi-threaded only when both parties run a local op."""
    local = {s.actor for s, k in zip(steps, kinds) if not s.is_star and k != REMOTE_WRITE}
    if VICTIM in local and ATTACKER in local:
        return (TIME_SLICED, MULTI_THREADED)
    return (TIME_SLICED,)


def expand_cases(pattern: VulnPattern, big_little: bool = False,
                 lock_prelude: bool = False) -> list:
    cases = []
    bindings = BINDINGS if big_little else BINDINGS[:1]
    for kinds in itertools.product(*(op_variants(s) for s in pattern.steps)):
        for sched in schedules_for(pattern.steps, kinds):
            for local, remote in bindings:
                cases.append(ConcreteCase(pattern.id, pattern.steps, kinds, sched,
                                          local, remote, lock_prelude))
    return cases


def case_count(pattern: VulnPattern) -> int:
    return len(expand_cases(pattern))


# -- oracle --------------------------------------------------------------

def default_replicates(cfg: MachineConfig) -> int:
    random_parts = any(c.l1_policy == "random" for c in cfg.cores) or cfg.secure.kind == "rf"
    return 32 if random_parts else 1


def ideal_timing(case: ConcreteCase, cfg: MachineConfig, seed: int = 0,
                 replicates: int | None = None, bench_geometry: CacheGeometry | None = None,
                 rep: int = 8) -> dict:
    """Mean noise-free Step3 latency per secret candidate."""
    n = replicates or default_replicates(cfg)
    out = {}
    for cand in CANDIDATES:
        prog = compile_case(case, cand, cfg, bench_geometry, rep)
        samples, _ = run_program(cfg, prog, n, seed, sigma=0.0)
        out[cand] = float(samples.mean())
    return out


def label_from_timings(t: dict, tol: float = EQ_TOL):
    a, x, n = t["a"], t["alias"], t["nib"]
    ax, an, xn = abs(a - x) <= tol, abs(a - n) <= tol, abs(x - n) <= tol
    if ax and an and xn:
        return None
    if not ax and not an and xn:
        return "AO"
    if ax and not an and not xn:
        return "SO"
    if an and not ax and not xn:
        return "SO"
    if not (ax or an or xn):
        return "SA"
    return None  # intransitive near-ties


def case_label(case: ConcreteCase, cfg: MachineConfig, seed: int = 0, **kw):
    try:
        return label_from_timings(ideal_timing(case, cfg, seed, **kw))
    except Untestable:
        return None


def best_label(labels) -> str | None:
    return max(labels, key=lambda t: TYPE_RANK[t], default=None)


def classify_pattern(pattern: VulnPattern, cfg: MachineConfig | None = None, seed: int = 0) -> tuple:
    """(type or None, interference) from the oracle over the pattern's single-core cases."""
    cfg = cfg or default_machine()
    labels = [case_label(c, cfg, seed) for c in expand_cases(pattern)]
    return best_label(labels), pattern.interference


def pattern_case_labels(pattern: VulnPattern, cfg: MachineConfig, seed: int = 0) -> dict:
    return {c.case_id: case_label(c, cfg, seed) for c in expand_cases(pattern)}


# -- enumeration ---------------------------------------------------------

def _raw_triples():
    vocab = vocabulary()
    for steps in itertools.product(vocab, repeat=3):
        yield steps


def enumerate_patterns(cfg: MachineConfig | None = None, seed: int = 0, progress=None) -> tuple:
    """All reduced, effective patterns on the reference machine, plus a rule-by-rule report.

    Reduction rules:
      (i)   at least one step touches u;
      (ii)  step 3 is not star;
      (iv-a) step 2 is not star, and no two adjacent steps are identical;
      (iii) some case is distinguishable under the oracle;
      (iv-b) a star first step is dropped when an explicit first step gives
             the same best label and the same set of case labels.
    """
    cfg = cfg or default_machine()
    report = {"triples": 0, "rule_i_no_u": 0, "rule_ii_star_step3": 0,
              "rule_iv_star_or_repeat": 0, "rule_iii_ineffective": 0, "rule_iv_redundant_star": 0}
    staged = []
    for steps in _raw_triples():
        report["triples"] += 1
        if not any(s.involves_u for s in steps):
            report["rule_i_no_u"] += 1
            continue
        if steps[2].is_star:
            report["rule_ii_star_step3"] += 1
            continue
        if steps[1].is_star or steps[0] == steps[1] or steps[1] == steps[2]:
            report["rule_iv_star_or_repeat"] += 1
            continue
        staged.append(steps)
    survivors = {}
    for k, steps in enumerate(staged):
        if progress and k % 200 == 0:
            progress(k, len(staged))
        pat = VulnPattern(steps)
        labels = pattern_case_labels(pat, cfg, seed)
        best = best_label(labels.values())
        if best is None:
            report["rule_iii_ineffective"] += 1
            continue
        survivors[steps] = (best, labels)
    result = []
    for steps, (best, labels) in survivors.items():
        if steps[0].is_star:
            sig = (best, frozenset(labels.values()))
            if any(other[1:] == steps[1:] and not other[0].is_star
                   and (b2, frozenset(l2.values())) == sig
                   for other, (b2, l2) in survivors.items()):
                report["rule_iv_redundant_star"] += 1
                continue
        result.append(VulnPattern(steps, type=best))
    report["survivors"] = len(result)
    return result, report


# -- catalog container and persistence ------------------------------------

@dataclass
class Catalog:
    patterns: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.patterns = sorted(self.patterns, key=lambda p: p.id)

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def by_id(self, pid: int) -> VulnPattern:
        for p in self.patterns:
            if p.id == pid:
                return p
        raise KeyError(pid)

    def named(self, name: str) -> list:
        return [p for p in self.patterns if p.name == name]

    def total_cases(self, big_little: bool = False) -> int:
        return sum(len(expand_cases(p, big_little)) for p in self.patterns)

    def counts_by_block(self) -> dict:
        out = {}
        for p in self.patterns:
            out[p.label] = out.get(p.label, 0) + 1
        return dict(sorted(out.items()))

    def subset(self, ids) -> "Catalog":
        ids = set(ids)
        return Catalog([p for p in self.patterns if p.id in ids], dict(self.meta))


def pattern_to_dict(p: VulnPattern) -> dict:
    return {
        "id": p.id,
        "steps": [{"actor": s.actor, "target": s.target} for s in p.steps],
        "type": p.type,
        "interference": p.interference,
        "name": p.name,
    }


def write_catalog(catalog: Catalog, path) -> None:
    """JSON with one pattern per line so errors can point at a line."""
    lines = ["{", f'  "version": {CATALOG_VERSION},',
             f'  "meta": {json.dumps(catalog.meta, sort_keys=True)},', '  "patterns": [']
    body = [f"    {json.dumps(pattern_to_dict(p))}" for p in catalog.patterns]
    lines.append(",\n".join(body))
    lines += ["  ]", "}"]
    Path(path).write_text("\n".join(lines) + "\n")


_ID_RE = re.compile(r'"id"\s*:\s*(-?\d+)')


def _line_of_entry(text: str, index: int) -> int:
    """1-based line of the index-th pattern object (best effort)."""
    hits = [text.count("\n", 0, m.start()) + 1 for m in _ID_RE.finditer(text)]
    return hits[index] if index < len(hits) else 0


def _parse_pattern(d, where: str) -> VulnPattern:
    if not isinstance(d, dict):
        raise CatalogError(f"{where}: pattern must be an object")
    required = {"id", "steps", "type", "interference"}
    missing = required - set(d)
    if missing:
        raise CatalogError(f"{where}: missing fields {sorted(missing)}")
    extra = set(d) - required - {"name"}
    if extra:
        raise CatalogError(f"{where}: unknown fields {sorted(extra)}")
    if not isinstance(d["id"], int) or isinstance(d["id"], bool) or d["id"] < 1:
        raise CatalogError(f"{where}: id must be a positive integer")
    if not isinstance(d["steps"], list) or len(d["steps"]) != 3:
        raise CatalogError(f"{where}: steps must list exactly three steps")
    try:
        steps = []
        for s in d["steps"]:
            if not isinstance(s, dict) or set(s) - {"actor", "target"}:
                raise CatalogError(f"{where}: each step is {{actor, target}}")
            steps.append(STAR_OP if s.get("target") == "star" else StepOp(s.get("actor"), s.get("target")))
        if d["type"] not in TYPES:
            raise CatalogError(f"{where}: type must be one of {TYPES}")
        pat = VulnPattern(tuple(steps), d["id"], d["type"], d.get("name"))
    except PatternError as exc:
        raise CatalogError(f"{where}: {exc}") from exc
    if d["interference"] != pat.interference:
        raise CatalogError(f"{where}: interference {d['interference']!r} contradicts the steps "
                           f"(expected {pat.interference!r})")
    return pat


def parse_catalog(text: str, source: str = "<catalog>") -> Catalog:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{source}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "patterns" not in doc:
        raise CatalogError(f"{source}:1: top level must be an object with 'patterns'")
    if doc.get("version") != CATALOG_VERSION:
        raise CatalogError(f"{source}:1: unsupported catalog version {doc.get('version')!r}")
    seen_ids, seen_steps = {}, {}
    patterns = []
    for k, d in enumerate(doc["patterns"]):
        line = _line_of_entry(text, k)
        where = f"{source}:{line}"
        pat = _parse_pattern(d, where)
        if pat.id in seen_ids:
            raise CatalogError(f"{where}: duplicate id {pat.id} (first at line {seen_ids[pat.id]})")
        if pat.steps in seen_steps:
            raise CatalogError(f"{where}: steps duplicate pattern at line {seen_steps[pat.steps]}")
        seen_ids[pat.id] = line
        seen_steps[pat.steps] = line
        patterns.append(pat)
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise CatalogError(f"{source}: meta must be an object")
    return Catalog(patterns, meta)


def read_catalog(path=None) -> Catalog:
    path = Path(path) if path else DEFAULT_CATALOG
    if not path.exists():
        raise CatalogError(f"catalog not found: {path}")
    return parse_catalog(path.read_text(), str(path))


def load_default_catalog() -> Catalog:
    return read_catalog(DEFAULT_CATALOG)


def relabel(pattern: VulnPattern, **changes) -> VulnPattern:
    return replace(pattern, **changes)


__all__ = [
    "Catalog", "CatalogError", "case_count", "case_label", "classify_pattern",
    "enumerate_patterns", "expand_cases", "ideal_timing", "interference_of",
    "label_from_timings", "load_default_catalog", "read_catalog", "steps_key",
    "write_catalog",
]
