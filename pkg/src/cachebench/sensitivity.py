"""Benchmarks that assume the wrong cache geometry: mapping diagnosis and parameter sweeps."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .catalog import Catalog
from .config import MachineConfig
from .geometry import CacheGeometry
from .harness import DEFAULT_TRIALS, P_THRESHOLD, SuiteResult, run_suite
from .program import DEFAULT_REP, make_layout

SITUATION_FEW_LINES = 1    # fewer distinct lines reach the intended device set than it has ways
SITUATION_SPREAD = 2       # one intended set spreads over several device sets
SITUATION_COLLIDE = 3      # distinct intended sets land in one device set
PARAMETERS = ("associativity", "line_size", "total_size")
DEFAULT_GRIDS = {
    "associativity": (1, 2, 4, 8, 16),
    "line_size": (16, 32, 64, 128, 256),
    "total_size": (8192, 16384, 32768, 65536, 98304),
}


@dataclass(frozen=True)
class MappingDiagnosis:
    situations: frozenset
    lines_in_set: tuple          # per intended set: distinct device lines that hit a_r's device set
    wrap_back: bool
    c_prime: Fraction

    @property
    def empty(self) -> bool:
        return not self.situations and not self.wrap_back

    def label(self) -> str:
        parts = [str(s) for s in sorted(self.situations)]
        if self.wrap_back:
            parts.append("wrap")
        return "+".join(parts) if parts else "-"


def generate_addresses(bench: CacheGeometry, rep: int = DEFAULT_REP) -> dict:
    """Addresses a benchmark believing `bench` would use, keyed by role.

    "groups" holds, per intended set, the asso_b lines the benchmark treats as
    filling that set (the alias line plus its eviction set).
    """
    lay = make_layout(bench.loose(), rep)
    groups = [(x,) + tuple(ev) for x, ev in zip(lay.alias, lay.evset)]
    return {"a": list(lay.a), "alias": list(lay.alias), "evset": [list(e) for e in lay.evset],
            "nib": list(lay.nib), "known_nib": list(lay.known_nib), "groups": groups}


def diagnose_mapping(bench: CacheGeometry, device: CacheGeometry, rep: int = DEFAULT_REP) -> MappingDiagnosis:
    addrs = generate_addresses(bench, rep)
    dline = device.line_size
    nsets = device.num_sets

    def dset(addr):
        return (addr // dline) % nsets

    situations = set()
    lines_in_set = []
    images = []
    for a, group in zip(addrs["a"], addrs["groups"]):
        target = dset(a)
        hit_lines = {g // dline for g in group if dset(g) == target}
        lines_in_set.append(len(hit_lines))
        if len(hit_lines) < device.associativity:
            situations.add(SITUATION_FEW_LINES)
        image = {dset(g) for g in (a,) + group}
        if len(image) > 1:
            situations.add(SITUATION_SPREAD)
        images.append(image)
    for i in range(len(images)):
        for j in range(i + 1, len(images)):
            if images[i] & images[j]:
                situations.add(SITUATION_COLLIDE)
    a_sets = {dset(a) for a in addrs["a"]}
    wrap = any(dset(n) in a_sets for n in addrs["nib"])
    c_prime = Fraction(bench.total_size, device.total_size)
    return MappingDiagnosis(frozenset(situations), tuple(lines_in_set), wrap, c_prime)


def device_geometry(cfg: MachineConfig) -> CacheGeometry:
    """The local little core's L1, which single-core cases run on."""
    return cfg.cores[0].l1_geometry


def bench_geometry(device: CacheGeometry, parameter: str, value: int) -> CacheGeometry:
    if parameter not in PARAMETERS:
        raise ValueError(f"unknown sweep parameter {parameter!r}; pick one of {PARAMETERS}")
    return CacheGeometry(**{**{"total_size": device.total_size, "associativity": device.associativity,
                               "line_size": device.line_size}, parameter: value}, strict=False)


@dataclass
class SweepPoint:
    parameter: str
    value: int
    bench: CacheGeometry
    diagnosis: MappingDiagnosis
    total: int
    by_type: dict
    effective_ids: dict = field(default_factory=dict)   # type -> sorted ids
    is_true: bool = False


def _point(parameter, value, bench, device, rep, result: SuiteResult, catalog: Catalog) -> SweepPoint:
    eff = result.effective_patterns()
    ids = {t: sorted(p.id for p in catalog if p.id in eff and p.type == t) for t in ("AO", "SO", "SA")}
    return SweepPoint(parameter, value, bench, diagnose_mapping(bench, device, rep), len(eff),
                      {t: len(v) for t, v in ids.items()}, ids, value == getattr(device, parameter))


def sweep_parameter(cfg: MachineConfig, catalog: Catalog, parameter: str, values=None,
                    n_trials: int = DEFAULT_TRIALS, seed: int = 0, p_threshold: float = P_THRESHOLD,
                    rep: int = DEFAULT_REP, cache: dict | None = None,
                    progress: Callable | None = None) -> list:
    """Run the suite once per value with the benchmark geometry patched.

    `cache` maps bench geometry to a finished SuiteResult so the shared true
    point is run once across the three sweeps.
    """
    device = device_geometry(cfg)
    values = DEFAULT_GRIDS[parameter] if values is None else values
    if getattr(device, parameter) not in values:
        raise ValueError(f"sweep over {parameter} must include the device value "
                         f"{getattr(device, parameter)}")
    cache = {} if cache is None else cache
    out = []
    for v in values:
        bench = bench_geometry(device, parameter, v)
        key = (bench.total_size, bench.associativity, bench.line_size)
        if key not in cache:
            if progress:
                progress(parameter, v)
            cache[key] = run_suite(cfg, catalog, n_trials, seed, p_threshold,
                                   bench_geometry=bench, rep=rep)
        out.append(_point(parameter, v, bench, device, rep, cache[key], catalog))
    return out


def sweep_all(cfg: MachineConfig, catalog: Catalog, grids=None, **kw) -> list:
    grids = grids or DEFAULT_GRIDS
    cache: dict = {}
    rows = []
    for param in PARAMETERS:
        if param in grids:
            rows += sweep_parameter(cfg, catalog, param, grids[param], cache=cache, **kw)
    return rows


def argmax_at_truth(points) -> bool:
    """Weak inequality: the true value's total is at least every other value's."""
    true = [p for p in points if p.is_true]
    if len(true) != 1:
        return False
    return all(true[0].total >= p.total for p in points)


def ao_invariant(points) -> bool:
    sets = {tuple(p.effective_ids["AO"]) for p in points}
    return len(sets) == 1
