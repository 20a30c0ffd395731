import re

import pytest

from cachebench.catalog import expand_cases
from cachebench.native import emit_catalog, emit_native_step_code


def asm_strings(src):
    return [s.split("\\n\\t") for s in re.findall(r'asm volatile\("([^"]*)"', src)]


def test_read_and_write_sequences(catalog):
    src = emit_native_step_code(expand_cases(catalog.by_id(44))[0])
    seqs = asm_strings(src)
    assert ["DSB SY", "ISB", "LDR %0, [%1]", "DSB SY", "ISB"] in seqs
    assert ["DSB SY", "ISB", "STR %0, [%1]", "DSB SY", "ISB"] in seqs


def test_flush_sequence(catalog):
    src = emit_native_step_code(expand_cases(catalog.by_id(5))[0])
    assert ["DSB ISH", "ISB", "DC CIVAC, %0", "DSB ISH", "ISB"] in asm_strings(src)
    assert re.search(r"for \(.*\) fl\(buf \+ A\[i\]\);", src)


def test_timing_and_pinning(catalog):
    src = emit_native_step_code(expand_cases(catalog.by_id(5))[0])
    assert "clock_gettime" in src and "sched_setaffinity" in src
    assert src.count("now_ns()") == 2  # start and end of the timed step


def test_multi_threaded_case_uses_sibling(catalog):
    mt = [c for c in expand_cases(catalog.by_id(44)) if c.scheduling == "multi_threaded"][0]
    src = emit_native_step_code(mt)
    sib = src[src.index("run_sibling"):src.index("run_remote")]
    assert "wait_turn(0)" in sib and "wait_turn(2)" in sib


def test_byte_stable(catalog):
    case = expand_cases(catalog.by_id(43))[3]
    assert emit_native_step_code(case) == emit_native_step_code(case)


def test_full_catalog_emission(catalog, tmp_path):
    paths = emit_catalog(catalog, tmp_path)
    assert len(paths) == 1094
    assert len(list(tmp_path.glob("*.c"))) == 1094
