"""Reduce the enumerated survivors to the fixed 88-pattern, 1094-case catalog.

The reconstructed reduction rules leave more patterns than the catalog holds.
Curation keeps the named attacks at their fixed ids, keeps every stable SO/SA
pattern, then fills the remaining slots with stable AO patterns so the
single-core case total lands exactly on the target.
"""

from __future__ import annotations

from .catalog import (Catalog, CatalogError, best_label, case_count, enumerate_patterns,
                      pattern_case_labels, relabel)
from .config import MachineConfig, default_machine

TARGET_PATTERNS = 88
TARGET_CASES = 1094
STABILITY_SEEDS = (0, 1, 2, 3, 4)
BLOCK_ORDER = ("E-AO", "I-AO", "E-SO", "I-SO", "E-SA", "I-SA")

# id -> (steps key, canonical name)
ANCHORS = {
    5: ("A_inv_a ; V_u ; A_a", "Flush+Reload"),
    6: ("V_inv_a ; V_u ; A_a", "Flush+Reload"),
    7: ("A_inv_all ; V_u ; A_a", "Flush+Reload"),
    8: ("V_inv_all ; V_u ; A_a", "Flush+Reload"),
    33: ("V_u ; V_a ; V_u", "Bernstein"),
    34: ("V_u ; V_alias ; V_u", "Bernstein"),
    35: ("V_a ; V_u ; V_a", "Bernstein"),
    36: ("V_alias ; V_u ; V_alias", "Bernstein"),
    41: ("V_u ; A_alias ; V_u", "Evict+Time"),
    42: ("V_u ; A_a ; V_u", "Evict+Time"),
    43: ("A_alias ; V_u ; A_alias", "Prime+Probe"),
    44: ("A_a ; V_u ; A_a", "Prime+Probe"),
    47: ("A_inv_a ; V_u ; A_inv_a", "Flush+Flush"),
    48: ("V_inv_a ; V_u ; A_inv_a", "Flush+Flush"),
    49: ("A_inv_all ; V_u ; A_inv_a", "Flush+Flush"),
    50: ("V_inv_all ; V_u ; A_inv_a", "Flush+Flush"),
    78: ("V_a ; V_u ; V_inv_a", None),
    79: ("A_a ; V_u ; V_inv_a", None),
}


def is_stable(pattern, cfg: MachineConfig, seeds=STABILITY_SEEDS) -> bool:
    labels = {best_label(pattern_case_labels(pattern, cfg, s).values()) for s in seeds}
    return len(labels) == 1


def _pick_exact(pool, sizes, k: int, total: int) -> list:
    """Earliest-in-order k items from pool whose sizes sum to total.

    reach[i] holds, per count c, a bitmask of sums achievable from pool[i:].
    """
    n = len(pool)
    reach = [None] * (n + 1)
    reach[n] = [1] + [0] * k
    for i in range(n - 1, -1, -1):
        nxt = reach[i + 1]
        cur = list(nxt)
        for c in range(1, k + 1):
            cur[c] |= nxt[c - 1] << sizes[i]
        reach[i] = cur
    if k < 0 or total < 0 or not (reach[0][k] >> total) & 1:
        raise CatalogError(f"no {k} patterns from the pool sum to {total} cases")
    picked = []
    for i in range(n):
        if k == 0:
            break
        rest = total - sizes[i]
        if rest >= 0 and (reach[i + 1][k - 1] >> rest) & 1:
            picked.append(pool[i])
            k, total = k - 1, rest
    return picked


def curate(survivors, cfg: MachineConfig | None = None, n_patterns: int = TARGET_PATTERNS,
           n_cases: int = TARGET_CASES, progress=None) -> tuple:
    """(Catalog, report) from enumerated survivors."""
    cfg = cfg or default_machine()
    by_key = {p.key: p for p in survivors}
    report = {"survivors": len(survivors), "target_patterns": n_patterns,
              "target_cases": n_cases, "survivor_cases": sum(case_count(p) for p in survivors)}
    missing = [key for key, _ in ANCHORS.values() if key not in by_key]
    if missing:
        raise CatalogError(f"named patterns missing from the enumeration: {missing}")

    chosen = {}
    for pid, (key, name) in ANCHORS.items():
        chosen[key] = (pid, name)
    unstable = []
    rest_sosa, pool = [], []
    for k, p in enumerate(sorted(survivors, key=lambda p: p.key)):
        if progress:
            progress(k, len(survivors))
        if p.key in chosen:
            if not is_stable(p, cfg):
                raise CatalogError(f"named pattern {p.key} has a seed-dependent label")
            continue
        if p.type == "AO" and p.uses_alias():
            continue
        if not is_stable(p, cfg):
            unstable.append(p.key)
            continue
        (pool if p.type == "AO" else rest_sosa).append(p)
    report["unstable"] = unstable

    fixed = [by_key[key] for key in chosen] + rest_sosa
    slots = n_patterns - len(fixed)
    budget = n_cases - sum(case_count(p) for p in fixed)
    pool.sort(key=lambda p: (p.interference, p.key))
    fill = _pick_exact(pool, [case_count(p) for p in pool], slots, budget)

    free_ids = [i for i in range(1, n_patterns + 1) if i not in ANCHORS]
    rest = sorted(rest_sosa + fill, key=lambda p: (BLOCK_ORDER.index(p.label), p.key))
    final = [relabel(by_key[key], id=pid, name=name) for key, (pid, name) in chosen.items()]
    final += [relabel(p, id=i, name=None) for i, p in zip(free_ids, rest)]
    cat = Catalog(final, {"version": 1, "seed": 0})
    report["dropped"] = len(survivors) - len(final)
    report["patterns"] = len(cat)
    report["cases"] = cat.total_cases()
    return cat, report


def build_catalog(cfg: MachineConfig | None = None, seed: int = 0, progress=None) -> tuple:
    """Enumerate, then curate. Returns (Catalog, report)."""
    cfg = cfg or default_machine()
    survivors, enum_report = enumerate_patterns(cfg, seed, progress)
    cat, cur_report = curate(survivors, cfg)
    cat.meta["seed"] = seed
    return cat, {**enum_report, **cur_report}


def discrepancy_text(report: dict) -> str:
    lines = [
        f"enumerated triples: {report.get('triples', '?')}",
        f"dropped, no u access: {report.get('rule_i_no_u', '?')}",
        f"dropped, star in step 3: {report.get('rule_ii_star_step3', '?')}",
        f"dropped, star step 2 or repeated step: {report.get('rule_iv_star_or_repeat', '?')}",
        f"dropped, indistinguishable: {report.get('rule_iii_ineffective', '?')}",
        f"dropped, redundant star step 1: {report.get('rule_iv_redundant_star', '?')}",
        f"surviving patterns: {report['survivors']} ({report['survivor_cases']} cases)",
    ]
    if report["survivors"] != report["target_patterns"]:
        lines.append(f"discrepancy: {report['survivors']} survivors vs "
                     f"{report['target_patterns']} catalog patterns; curated down")
    lines.append(f"unstable labels across seeds: {len(report.get('unstable', []))}")
    lines.append(f"curated: {report['patterns']} patterns, {report['cases']} cases")
    return "\n".join(lines)
