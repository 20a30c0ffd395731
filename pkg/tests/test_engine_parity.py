import numpy as np
import pytest

from cachebench.catalog import expand_cases
from cachebench.config import default_machine
from cachebench.engine import HAVE_COMPILED, default_backend, run_program
from cachebench.program import compile_case

pytestmark = pytest.mark.skipif(not HAVE_COMPILED, reason="compiled engine not built")

BASE = default_machine()
CONFIGS = {
    "default": BASE,
    "lru": BASE.with_policy("lru"),
    "rf5": BASE.with_secure(kind="rf", rf_size=5),
    "rf-random-l2": BASE.with_secure(kind="rf", rf_size=16, rf_l2_fill="random"),
    "pl": BASE.with_secure(kind="pl"),
    "toggles": BASE.with_toggles(transient_region=True, scu=True, mshr_size=1, write_buffer_size=2),
}
PATTERNS = (5, 41, 43, 44, 47, 78, 60)


@pytest.mark.parametrize("name", sorted(CONFIGS))
def test_compiled_matches_python(name, catalog):
    cfg = CONFIGS[name]
    for pid in PATTERNS:
        cases = expand_cases(catalog.by_id(pid), big_little=True, lock_prelude=cfg.secure.kind == "pl")
        for case in cases[:: max(1, len(cases) // 6)]:
            for cand in ("a", "alias", "nib"):
                prog = compile_case(case, cand, cfg)
                sc, kc = run_program(cfg, prog, 25, 99, backend="c")
                sp, kp = run_program(cfg, prog, 25, 99, backend="python")
                assert np.array_equal(sc, sp), (case.case_id, cand)
                assert kc == kp, (case.case_id, cand)


def test_backend_selection(monkeypatch):
    monkeypatch.setenv("CACHEBENCH_BACKEND", "python")
    assert default_backend() == "python"
    monkeypatch.delenv("CACHEBENCH_BACKEND")
    assert default_backend() == "c"
