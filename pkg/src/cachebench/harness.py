"""Repeated noisy execution of concrete cases and Welch-based effectiveness verdicts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .catalog import Catalog, expand_cases
from .config import MachineConfig
from .engine import run_program
from .geometry import CacheGeometry
from .patterns import CANDIDATES, ConcreteCase
from .program import Untestable, compile_case
from .rng import derive_seed, stable_hash
from .welch import WelchResult, welch_t_test

P_THRESHOLD = 0.00049
DEFAULT_TRIALS = 1000
PAIRS = (("a", "alias"), ("a", "nib"), ("alias", "nib"))


@dataclass
class TimingSamples:
    case_id: str
    samples: dict
    n_trials: int
    seed: int
    counters: dict = field(default_factory=dict)
    untestable: bool = False

    def mean(self, cand: str) -> float:
        return float(np.mean(self.samples[cand]))


@dataclass(frozen=True)
class Verdict:
    case_id: str
    effective: bool
    matched_type: Optional[str]
    p_values: tuple
    welch: tuple = ()
    inconsistent: bool = False
    untestable: bool = False
    matches_label: Optional[bool] = None


def case_seed(seed: int, case: ConcreteCase) -> int:
    return derive_seed(seed, stable_hash(case.case_id))


def collect_samples(case: ConcreteCase, cfg: MachineConfig, n_trials: int = DEFAULT_TRIALS,
                    seed: int = 0, bench_geometry: CacheGeometry | None = None, rep: int = 8,
                    sigma: float | None = None) -> TimingSamples:
    """Step3 latency samples for each secret candidate.

    All three candidates share one seed, so their replacement and noise draws
    line up trial by trial (common random numbers).
    """
    if n_trials < 2:
        raise ValueError("n_trials must be >= 2")
    s = case_seed(seed, case)
    samples, counters = {}, {}
    try:
        progs = [compile_case(case, cand, cfg, bench_geometry, rep) for cand in CANDIDATES]
    except Untestable:
        return TimingSamples(case.case_id, {}, n_trials, s, untestable=True)
    for cand, prog in zip(CANDIDATES, progs):
        samples[cand], k = run_program(cfg, prog, n_trials, s, sigma)
        for name, v in k.items():
            counters[name] = counters.get(name, 0) + v
    return TimingSamples(case.case_id, samples, n_trials, s, counters)


def type_from_significance(sep_ax: bool, sep_an: bool, sep_xn: bool) -> tuple:
    """(type or None, inconsistent flag) from which candidate pairs separate."""
    if sep_ax and sep_an and sep_xn:
        return "SA", False
    if sep_ax and sep_an:
        return "AO", False
    if sep_an and sep_xn:
        return "SO", False
    if sep_ax and sep_xn:
        return "SO", False
    if not (sep_ax or sep_an or sep_xn):
        return None, False
    return None, True


def judge_p_values(p_values, p_threshold: float = P_THRESHOLD) -> tuple:
    if not 0.0 < p_threshold < 1.0:
        raise ValueError("p_threshold must lie in (0, 1)")
    sep = [p < p_threshold for p in p_values]
    return type_from_significance(*sep)


def judge_case(samples: TimingSamples, pattern_label: str | None = None,
               p_threshold: float = P_THRESHOLD) -> Verdict:
    if samples.untestable:
        return Verdict(samples.case_id, False, None, (), untestable=True)
    tests = tuple(welch_t_test(samples.samples[x], samples.samples[y]) for x, y in PAIRS)
    pv = tuple(t.p_value for t in tests)
    matched, inconsistent = judge_p_values(pv, p_threshold)
    matches = None if pattern_label is None else matched == pattern_label
    return Verdict(samples.case_id, matched is not None, matched, pv, tests, inconsistent,
                   matches_label=matches)


@dataclass
class CaseResult:
    pattern_id: int
    case: ConcreteCase
    verdict: Verdict
    means: dict


@dataclass
class SuiteResult:
    config_name: str
    cases: list
    pattern_ids: list
    counters: dict
    params: dict

    def pattern_status(self) -> dict:
        """pattern id -> 'all' | 'some' | 'none' effective cases."""
        eff, tot = {}, {}
        for r in self.cases:
            tot[r.pattern_id] = tot.get(r.pattern_id, 0) + 1
            eff[r.pattern_id] = eff.get(r.pattern_id, 0) + int(r.verdict.effective)
        out = {}
        for pid in self.pattern_ids:
            e, t = eff.get(pid, 0), tot.get(pid, 0)
            out[pid] = "none" if e == 0 else ("all" if e == t else "some")
        return out

    def effective_patterns(self) -> set:
        return {pid for pid, s in self.pattern_status().items() if s != "none"}

    def effective_cases(self) -> list:
        return [r for r in self.cases if r.verdict.effective]

    def count_effective(self, types=None, catalog: Catalog | None = None) -> int:
        pids = self.effective_patterns()
        if types is None:
            return len(pids)
        return sum(1 for pid in pids if catalog.by_id(pid).type in types)


def run_suite(cfg: MachineConfig, catalog: Catalog, n_trials: int = DEFAULT_TRIALS, seed: int = 0,
              p_threshold: float = P_THRESHOLD, big_little: bool = False,
              bench_geometry: CacheGeometry | None = None, rep: int = 8,
              lock_prelude: bool | None = None, sigma: float | None = None,
              case_filter: Callable | None = None, progress: Callable | None = None) -> SuiteResult:
    """Verdict for every expanded case; a pattern counts as effective if any case is."""
    if lock_prelude is None:
        lock_prelude = cfg.secure.kind == "pl"
    rows = []
    totals: dict = {}
    patterns = list(catalog)
    for k, pat in enumerate(patterns):
        if progress:
            progress(k, len(patterns))
        for case in expand_cases(pat, big_little, lock_prelude):
            if case_filter is not None and not case_filter(case):
                continue
            ts = collect_samples(case, cfg, n_trials, seed, bench_geometry, rep, sigma)
            verdict = judge_case(ts, pat.type, p_threshold)
            means = {c: ts.mean(c) for c in ts.samples}
            rows.append(CaseResult(pat.id, case, verdict, means))
            for name, v in ts.counters.items():
                totals[name] = totals.get(name, 0) + v
    params = {"n_trials": n_trials, "seed": seed, "p_threshold": p_threshold,
              "big_little": big_little, "rep": rep,
              "bench_geometry": str(bench_geometry) if bench_geometry else None}
    return SuiteResult(cfg.name, rows, [p.id for p in patterns], totals, params)


def mean_difference_ci(x, y, z: float = 3.0) -> tuple:
    """Mean difference and a +-z standard-error half width."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d = float(x.mean() - y.mean())
    se = float(np.sqrt(x.var(ddof=1) / x.size + y.var(ddof=1) / y.size))
    return d, z * se


__all__ = ["CaseResult", "P_THRESHOLD", "SuiteResult", "TimingSamples", "Verdict",
           "WelchResult", "collect_samples", "judge_case", "run_suite"]
