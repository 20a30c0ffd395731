import json

import pytest

from cachebench.config import (ConfigError, LatencyTable, MachineConfig, default_machine, load_machine,
                               save_machine)
from cachebench.catalog import DATA_DIR


def test_round_trip(tmp_path):
    cfg = default_machine().with_toggles(scu=True, write_buffer_size=2).with_secure(kind="rf", rf_size=5)
    p = tmp_path / "m.json"
    save_machine(cfg, p)
    assert load_machine(p) == cfg


def test_shipped_machine_is_the_default():
    assert load_machine(DATA_DIR / "default_machine.json") == default_machine()


def test_default_little_core_geometry():
    g = default_machine().cores[0].l1_geometry
    assert (g.total_size, g.associativity, g.line_size) == (32768, 4, 64)


def test_unknown_field_rejected(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"cores": [], "bogus": 1}))
    with pytest.raises(ConfigError):
        load_machine(p)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_machine("/nonexistent/machine.json")


def test_latency_validation():
    with pytest.raises(ConfigError):
        LatencyTable(t_L1=-1)


def test_scaled_latency_is_proportional():
    lat = LatencyTable().scaled(3)
    assert lat.t_dram == 600 and lat.t_L1 == 12


def test_config_is_hashable():
    assert hash(default_machine()) == hash(MachineConfig())
