"""CSV results, the pattern x config summary matrix, and a static SVG dot matrix."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .harness import PAIRS, SuiteResult

RESULTS_VERSION = 1
RESULT_FIELDS = ["version", "config", "pattern_id", "case_id", "op_kinds", "scheduling",
                 "local_cluster", "remote_cluster"]
for _x, _y in PAIRS:
    RESULT_FIELDS += [f"t_{_x}_{_y}", f"df_{_x}_{_y}", f"p_{_x}_{_y}"]
RESULT_FIELDS += ["mean_a", "mean_alias", "mean_nib", "effective", "matched_type", "inconsistent",
                  "untestable"]
SENSITIVITY_FIELDS = ["version", "parameter", "value", "total_effective", "so_effective",
                      "ao_effective", "sa_effective", "situations", "wrap_back", "c_prime"]
STATUS_MARK = {"all": "solid", "some": "half", "none": "empty"}


def _num(x) -> str:
    return repr(float(x))


def _write(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


def result_rows(result: SuiteResult) -> list:
    rows = []
    for r in result.cases:
        c, v = r.case, r.verdict
        row = [RESULTS_VERSION, result.config_name, r.pattern_id, c.case_id, c.kinds_code,
               c.scheduling, c.local_cluster, c.remote_cluster]
        if v.welch:
            for w in v.welch:
                row += [_num(w.t_statistic), _num(w.degrees_of_freedom), _num(w.p_value)]
        else:
            row += [""] * (3 * len(PAIRS))
        row += [_num(r.means[k]) if k in r.means else "" for k in ("a", "alias", "nib")]
        row += [int(v.effective), v.matched_type or "", int(v.inconsistent), int(v.untestable)]
        rows.append(row)
    return rows


def write_results_csv(result: SuiteResult, path) -> None:
    _write(path, RESULT_FIELDS, result_rows(result))


def write_summary_csv(results: dict, path) -> None:
    """One row per config, one column per pattern id, cells all/some/none."""
    ids = sorted({pid for r in results.values() for pid in r.pattern_ids})
    rows = []
    for name, r in results.items():
        st = r.pattern_status()
        eff = r.effective_patterns()
        rows.append([name, len(eff)] + [st.get(pid, "") for pid in ids])
    _write(path, ["config", "effective_patterns"] + [f"p{pid}" for pid in ids], rows)


def write_counters_csv(results: dict, path) -> None:
    names = sorted({k for r in results.values() for k in r.counters})
    rows = [[name] + [r.counters.get(k, 0) for k in names] for name, r in results.items()]
    _write(path, ["config"] + names, rows)


def write_sensitivity_csv(points, path) -> None:
    rows = []
    for p in points:
        d = p.diagnosis
        rows.append([RESULTS_VERSION, p.parameter, p.value, p.total, p.by_type["SO"], p.by_type["AO"],
                     p.by_type["SA"], "+".join(str(s) for s in sorted(d.situations)) or "-",
                     int(d.wrap_back), str(d.c_prime)])
    _write(path, SENSITIVITY_FIELDS, rows)


def read_summary_csv(path) -> dict:
    """config -> {pattern id: status}"""
    out = {}
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        ids = [int(h[1:]) for h in header[2:]]
        for row in rd:
            out[row[0]] = dict(zip(ids, row[2:]))
    return out


def render_dot_matrix(summary: dict, path, cell: int = 12) -> None:
    """SVG: one row per config, one column per pattern id; solid/half/empty dots."""
    configs = list(summary)
    ids = sorted({pid for row in summary.values() for pid in row})
    label_w = 8 + 7 * max((len(c) for c in configs), default=4)
    top = 28
    width = label_w + cell * len(ids) + 8
    height = top + cell * len(configs) + 8
    r = cell * 0.38
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="monospace" font-size="9">',
           '<defs><clipPath id="lh"><rect x="-50" y="-50" width="50" height="100"/></clipPath></defs>']
    for j, pid in enumerate(ids):
        if pid % 5 == 0 or j == 0:
            x = label_w + cell * j + cell / 2
            out.append(f'<text x="{x:.1f}" y="{top - 8}" text-anchor="middle">{pid}</text>')
    for i, name in enumerate(configs):
        y = top + cell * i + cell / 2
        out.append(f'<text x="4" y="{y + 3:.1f}">{name}</text>')
        for j, pid in enumerate(ids):
            x = label_w + cell * j + cell / 2
            status = summary[name].get(pid, "none")
            out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="{r:.1f}" fill="none" stroke="black"/>')
            if status == "all":
                out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="{r:.1f}" fill="black"/>')
            elif status == "some":
                out.append(f'<g transform="translate({x:.1f},{y:.1f})"><circle r="{r:.1f}" '
                           f'fill="black" clip-path="url(#lh)"/></g>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def write_suite_outputs(results: dict, out_dir, plot: bool = False) -> dict:
    """Results CSV per config, then the summary and counters; the plot is drawn last from the CSV."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, r in results.items():
        p = out_dir / f"results_{name}.csv"
        write_results_csv(r, p)
        paths[f"results_{name}"] = p
    paths["summary"] = out_dir / "summary.csv"
    write_summary_csv(results, paths["summary"])
    paths["counters"] = out_dir / "counters.csv"
    write_counters_csv(results, paths["counters"])
    if plot:
        paths["plot"] = out_dir / "matrix.svg"
        render_dot_matrix(read_summary_csv(paths["summary"]), paths["plot"])
    return paths
