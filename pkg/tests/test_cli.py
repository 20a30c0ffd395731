import csv
import json

from cachebench.cli import main


def test_catalog_summary(capsys):
    from cachebench.catalog import DEFAULT_CATALOG
    assert main(["catalog", "--catalog", str(DEFAULT_CATALOG), "--big-little"]) == 0
    out = capsys.readouterr().out
    assert "88 patterns, 1094 single-core cases" in out
    assert "4376 cases" in out


def test_missing_machine_is_config_error(tmp_path, capsys):
    assert main(["suite", "--machine", str(tmp_path / "nope.json"), "--patterns", "5"]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_machine_field(tmp_path):
    from cachebench.config import default_machine, save_machine
    p = tmp_path / "m.json"
    save_machine(default_machine(), p)
    data = json.loads(p.read_text())
    data["cores"][0]["l1"]["associativity"] = 3
    p.write_text(json.dumps(data))
    assert main(["suite", "--machine", str(p), "--patterns", "5"]) == 2


def test_bad_catalog_is_schema_error(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text('{"version": 1, "patterns": [{"id": 1}]}')
    assert main(["suite", "--catalog", str(p)]) == 3
    assert "error" in capsys.readouterr().err


def test_bad_trials_and_pvalue():
    assert main(["suite", "--patterns", "5", "--trials", "1"]) == 2
    assert main(["suite", "--patterns", "5", "--pvalue", "1.5"]) == 2


def test_suite_subset(tmp_path, capsys):
    rc = main(["suite", "--patterns", "5,44", "--trials", "100", "--out", str(tmp_path), "--plot"])
    assert rc == 0
    assert "2/2 patterns effective" in capsys.readouterr().out
    rows = list(csv.DictReader((tmp_path / "results_default.csv").open()))
    assert {r["pattern_id"] for r in rows} == {"5", "44"}
    assert (tmp_path / "matrix.svg").exists()


def test_toggle_flags_reach_machine(tmp_path, capsys):
    main(["suite", "--patterns", "5", "--trials", "50", "--wb-size", "0", "--store-buffer", "off",
          "--out", str(tmp_path)])
    assert "patterns effective" in capsys.readouterr().out


def test_emit_native(catalog, tmp_path, capsys):
    n = catalog.subset([5, 44]).total_cases()
    assert main(["emit-native", "--patterns", "5,44", "--out", str(tmp_path)]) == 0
    assert f"wrote {n} source files" in capsys.readouterr().out
    assert len(list(tmp_path.glob("*.c"))) == n
