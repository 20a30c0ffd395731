import numpy as np
import pytest

from cachebench.catalog import case_label, expand_cases
from cachebench.harness import (TimingSamples, collect_samples, judge_case, judge_p_values,
                                run_suite, type_from_significance)


@pytest.mark.parametrize("sep,expected", [
    ((True, True, True), ("SA", False)),
    ((True, True, False), ("AO", False)),
    ((False, True, True), ("SO", False)),
    ((True, False, True), ("SO", False)),
    ((False, False, False), (None, False)),
    ((True, False, False), (None, True)),
    ((False, True, False), (None, True)),
    ((False, False, True), (None, True)),
])
def test_type_mapping(sep, expected):
    assert type_from_significance(*sep) == expected


def test_threshold_is_validated():
    with pytest.raises(ValueError):
        judge_p_values((0.1, 0.1, 0.1), 0.0)
    assert judge_p_values((1e-4, 1e-4, 0.5))[0] == "AO"
    assert judge_p_values((1e-4, 1e-4, 0.5), p_threshold=1e-5)[0] is None


def test_judge_constructed_samples():
    rng = np.random.default_rng(0)
    s = TimingSamples("x", {"a": rng.normal(30, 3, 500), "alias": rng.normal(200, 3, 500),
                            "nib": rng.normal(200, 3, 500)}, 500, 0)
    v = judge_case(s, "AO")
    assert v.effective and v.matched_type == "AO" and v.matches_label


def test_samples_are_deterministic(catalog, machine):
    case = expand_cases(catalog.by_id(43))[0]
    a = collect_samples(case, machine, 300, seed=5)
    b = collect_samples(case, machine, 300, seed=5)
    c = collect_samples(case, machine, 300, seed=6)
    for k in ("a", "alias", "nib"):
        assert np.array_equal(a.samples[k], b.samples[k])
    assert not np.array_equal(a.samples["a"], c.samples["a"])


def test_trials_must_be_at_least_two(catalog, machine):
    with pytest.raises(ValueError):
        collect_samples(expand_cases(catalog.by_id(5))[0], machine, 1)


def test_verdicts_agree_with_oracle(catalog, machine):
    """An effective case is judged the same type the noise-free oracle gives it."""
    sub = catalog.subset([5, 33, 41, 43, 44, 47, 57, 78])
    res = run_suite(machine, sub, n_trials=1000, seed=0)
    for r in res.cases:
        lab = case_label(r.case, machine)
        if r.verdict.effective:
            assert r.verdict.matched_type == lab, r.case.case_id
    status = res.pattern_status()
    assert set(status) == {p.id for p in sub}
    assert all(v in ("all", "some", "none") for v in status.values())


def test_suite_counts_big_little(catalog, machine):
    sub = catalog.subset([5])
    res = run_suite(machine, sub, n_trials=50, big_little=True)
    assert len(res.cases) == 4 * len(expand_cases(sub.by_id(5)))
