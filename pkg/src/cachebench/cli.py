"""cachebench command line: catalog, suite, sweep, secure-eval, emit-native."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .catalog import Catalog, CatalogError, read_catalog, write_catalog
from .config import ConfigError, MachineConfig, default_machine, load_machine
from .harness import DEFAULT_TRIALS, P_THRESHOLD, run_suite

EXIT_OK, EXIT_CONFIG, EXIT_SCHEMA = 0, 2, 3
log = logging.getLogger("cachebench")


def _machine(args) -> MachineConfig:
    cfg = load_machine(args.machine) if args.machine else default_machine()
    toggles = {}
    for flag, key in (("wb_size", "write_buffer_size"), ("mshr", "mshr_size"),
                      ("store_buffer", "store_buffer"), ("scu", "scu"), ("transient", "transient_region")):
        v = getattr(args, flag, None)
        if v is not None:
            toggles[key] = v
    if toggles:
        cfg = cfg.with_toggles(**toggles)
    if getattr(args, "sigma", None) is not None:
        cfg = cfg.with_noise(sigma=args.sigma)
    if getattr(args, "policy", None):
        cfg = cfg.with_policy(args.policy)
    return cfg


def _onoff(s: str) -> bool:
    if s not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return s == "on"


def _progress(label):
    def cb(k, n):
        if k % 10 == 0:
            log.info("%s: pattern %d/%d", label, k, n)
    return cb


def cmd_catalog(args) -> int:
    from .curation import build_catalog, discrepancy_text
    cfg = _machine(args)
    if args.catalog:
        cat = read_catalog(args.catalog)
    else:
        log.info("enumerating patterns on the reference machine")
        cat, report = build_catalog(cfg, args.seed)
        print(discrepancy_text(report))
    if args.check:
        from .catalog import classify_pattern
        bad = [p for p in cat if classify_pattern(p, cfg, args.seed)[0] != p.type]
        for p in bad:
            print(f"label mismatch: {p}", file=sys.stderr)
        if bad:
            raise ConfigError(f"{len(bad)} stored labels disagree with the oracle")
    blocks = ", ".join(f"{k}: {v}" for k, v in cat.counts_by_block().items())
    print(f"blocks: {blocks}")
    print(f"{len(cat)} patterns, {cat.total_cases()} single-core cases")
    if args.big_little:
        print(f"big.LITTLE bindings: {cat.total_cases(big_little=True)} cases")
    if args.out:
        out = Path(args.out)
        if out.suffix != ".json":
            out.mkdir(parents=True, exist_ok=True)
            out = out / "catalog.json"
        write_catalog(cat, out)
        print(f"wrote {out}")
    return EXIT_OK


def _catalog(args) -> Catalog:
    cat = read_catalog(args.catalog)
    if getattr(args, "patterns", None):
        cat = cat.subset(int(x) for x in args.patterns.split(","))
    return cat


def cmd_suite(args) -> int:
    from .report import write_suite_outputs
    cfg = _machine(args)
    cat = _catalog(args)
    res = run_suite(cfg, cat, args.trials, args.seed, args.pvalue, big_little=args.big_little,
                    progress=_progress(cfg.name))
    paths = write_suite_outputs({cfg.name: res}, args.out, plot=args.plot)
    print(f"{cfg.name}: {len(res.effective_patterns())}/{len(cat)} patterns effective, "
          f"{len(res.effective_cases())}/{len(res.cases)} cases")
    for p in paths.values():
        print(f"wrote {p}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .report import render_dot_matrix, write_sensitivity_csv
    from .sensitivity import DEFAULT_GRIDS, PARAMETERS, sweep_parameter
    cfg = _machine(args)
    cat = _catalog(args)
    params = [args.parameter] if args.parameter else list(PARAMETERS)
    cache, points = {}, []
    for param in params:
        values = [int(v) for v in args.values.split(",")] if args.values else DEFAULT_GRIDS[param]
        points += sweep_parameter(cfg, cat, param, values, args.trials, args.seed, args.pvalue,
                                  cache=cache, progress=lambda p, v: log.info("sweep %s=%s", p, v))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sensitivity_csv(points, out / "sensitivity.csv")
    for p in points:
        mark = " *" if p.is_true else ""
        print(f"{p.parameter}={p.value}: total {p.total}, SO {p.by_type['SO']}, AO {p.by_type['AO']}, "
              f"SA {p.by_type['SA']}, situations {p.diagnosis.label()}{mark}")
    print(f"wrote {out / 'sensitivity.csv'}")
    if args.plot:
        ids = sorted(q.id for q in cat)
        rows = {}
        for p in points:
            eff = {i for t in p.effective_ids.values() for i in t}
            rows[f"{p.parameter}={p.value}"] = {i: ("all" if i in eff else "none") for i in ids}
        render_dot_matrix(rows, out / "sensitivity.svg")
        print(f"wrote {out / 'sensitivity.svg'}")
    return EXIT_OK


def secure_configs(cfg: MachineConfig, rf_sizes=(5, 128)) -> dict:
    configs = {"normal": cfg.with_secure(kind="none"), "pl": cfg.with_secure(kind="pl")}
    for n in rf_sizes:
        configs[f"rf{n}"] = cfg.with_secure(kind="rf", rf_size=n, rf_start=None)
    return configs


def cmd_secure_eval(args) -> int:
    from .report import write_suite_outputs
    cfg = _machine(args)
    cat = _catalog(args)
    sizes = tuple(int(x) for x in args.rf_sizes.split(","))
    results = {}
    for name, c in secure_configs(cfg, sizes).items():
        results[name] = run_suite(c, cat, args.trials, args.seed, args.pvalue,
                                  big_little=args.big_little, progress=_progress(name))
        r = results[name]
        print(f"{name}: {len(r.effective_patterns())}/{len(cat)} patterns effective")
    paths = write_suite_outputs(results, args.out, plot=args.plot)
    for p in paths.values():
        print(f"wrote {p}")
    return EXIT_OK


def cmd_emit_native(args) -> int:
    from .native import emit_catalog
    cfg = _machine(args)
    cat = _catalog(args)
    paths = emit_catalog(cat, args.out, cfg, big_little=args.big_little)
    print(f"wrote {len(paths)} source files to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cachebench", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, catalog=True, trials=True):
        p.add_argument("--machine", help="machine config JSON (default: built-in reference machine)")
        if catalog:
            p.add_argument("--catalog", help="catalog JSON (default: shipped catalog)")
            p.add_argument("--patterns", help="comma-separated pattern ids to restrict to")
        p.add_argument("--seed", type=int, default=0)
        if trials:
            p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
            p.add_argument("--pvalue", type=float, default=P_THRESHOLD)
        p.add_argument("--out", default="out")
        p.add_argument("--plot", action="store_true", help="also render an SVG dot matrix")
        p.add_argument("--big-little", action="store_true", help="bind cases to all four cluster pairs")
        p.add_argument("--wb-size", type=int, dest="wb_size")
        p.add_argument("--mshr", type=int)
        p.add_argument("--store-buffer", type=_onoff, dest="store_buffer", metavar="on|off")
        p.add_argument("--scu", type=_onoff, metavar="on|off")
        p.add_argument("--transient", type=_onoff, metavar="on|off")
        p.add_argument("--sigma", type=float)
        p.add_argument("--policy", choices=("lru", "random"))

    p = sub.add_parser("catalog", help="enumerate, curate and write the pattern catalog")
    common(p, catalog=False, trials=False)
    p.add_argument("--catalog", help="summarize an existing catalog instead of rebuilding")
    p.add_argument("--check", action="store_true", help="re-derive every label with the oracle")
    p.set_defaults(func=cmd_catalog, out=None)

    p = sub.add_parser("suite", help="run every case and judge effectiveness")
    common(p)
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("sweep", help="benchmark-geometry sensitivity sweep")
    common(p)
    p.add_argument("--parameter", choices=("associativity", "line_size", "total_size"))
    p.add_argument("--values", help="comma-separated grid (default: built-in grid)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("secure-eval", help="normal vs PL vs RF caches")
    common(p)
    p.add_argument("--rf-sizes", default="5,128")
    p.set_defaults(func=cmd_secure_eval)

    p = sub.add_parser("emit-native", help="write C/inline-asm sources, one per case")
    common(p, trials=False)
    p.set_defaults(func=cmd_emit_native)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if getattr(args, "trials", DEFAULT_TRIALS) < 2:
            raise ConfigError("--trials must be at least 2")
        if not 0.0 < getattr(args, "pvalue", P_THRESHOLD) < 1.0:
            raise ConfigError("--pvalue must lie in (0, 1)")
        return args.func(args)
    except CatalogError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
