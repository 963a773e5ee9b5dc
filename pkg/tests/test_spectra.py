import math

import pytest

from bugloc.errors import NoPassingTests
from bugloc.spectra import (
    CoverageRecord,
    SpectraQuery,
    load_coverage,
    parse_coverage_line,
    rank_lines_spectra,
    save_coverage,
    suspiciousness_scores,
)


def rec(pid, tid, outcome, lines):
    return CoverageRecord(pid, tid, outcome, frozenset(lines))


def test_line_only_in_failing_run():
    records = [
        rec("p", "t0", "fail", {1, 2}),
        rec("p", "t1", "pass", {1}),
        rec("p", "t2", "pass", {1}),
        rec("p", "t3", "pass", {1}),
        rec("p", "t4", "pass", {1}),
    ]
    q = SpectraQuery("p", "t0", "all_passing")
    # line 2: ef=1 of tf=1, ep=0 of tp=4 -> both formulas give 1.0
    assert suspiciousness_scores(records, q, "tarantula")[2] == 1.0
    assert suspiciousness_scores(records, q, "ochiai")[2] == 1.0


def test_half_and_sqrt_half_case():
    records = [
        rec("p", "t0", "fail", {5}),
        rec("p", "t1", "pass", {5}),
    ]
    q = SpectraQuery("p", "t0", "all_passing")
    # ef=1, tf=1, ep=1, tp=1
    assert suspiciousness_scores(records, q, "tarantula")[5] == 0.5
    assert abs(suspiciousness_scores(records, q, "ochiai")[5] - 1 / math.sqrt(2)) < 1e-12


def test_line_not_executed_by_failing_scores_zero():
    records = [
        rec("p", "t0", "fail", {1}),
        rec("p", "t1", "pass", {1, 7}),
    ]
    q = SpectraQuery("p", "t0", "all_passing")
    for technique in ("tarantula", "ochiai"):
        assert suspiciousness_scores(records, q, technique)[7] == 0.0


def test_scores_in_unit_interval_and_ochiai_zero_iff_unexecuted():
    import random

    rnd = random.Random(4)
    for _ in range(50):
        n_tests = rnd.randint(1, 5)
        records = [rec("p", "tf", "fail", {l for l in range(1, 9) if rnd.random() < 0.5})]
        for i in range(n_tests):
            records.append(
                rec("p", f"tp{i}", "pass", {l for l in range(1, 9) if rnd.random() < 0.5})
            )
        q = SpectraQuery("p", "tf", "all_passing")
        for technique in ("tarantula", "ochiai"):
            scores = suspiciousness_scores(records, q, technique)
            assert all(0.0 <= s <= 1.0 for s in scores.values())
        ochiai = suspiciousness_scores(records, q, "ochiai")
        for line, score in ochiai.items():
            assert (score == 0.0) == (line not in records[0].executed_lines)


def test_one_passing_reproducible_and_member_of_family():
    records = [
        rec("p", "t0", "fail", {1, 2, 3}),
        rec("p", "t1", "pass", {1}),
        rec("p", "t2", "pass", {1, 2}),
        rec("p", "t3", "pass", {1, 2, 3}),
    ]
    family = []
    for chosen in ("t1", "t2", "t3"):
        sub = [records[0]] + [r for r in records[1:] if r.test_id == chosen]
        family.append(suspiciousness_scores(sub, SpectraQuery("p", "t0"), "tarantula"))
    seen = set()
    for seed in range(20):
        q = SpectraQuery("p", "t0", "one_passing", seed=seed)
        scores = suspiciousness_scores(records, q, "tarantula")
        again = suspiciousness_scores(records, q, "tarantula")
        assert scores == again  # seed-reproducible
        assert scores in family  # member of the per-test family
        seen.add(tuple(sorted(scores.items())))
    assert len(seen) > 1  # different seeds do reach different choices


def test_one_passing_without_candidates():
    records = [rec("p", "t0", "fail", {1})]
    with pytest.raises(NoPassingTests):
        suspiciousness_scores(records, SpectraQuery("p", "t0", "one_passing"), "ochiai")


def test_failing_test_must_fail():
    records = [rec("p", "t0", "pass", {1})]
    with pytest.raises(ValueError):
        suspiciousness_scores(records, SpectraQuery("p", "t0"), "ochiai")


def test_rank_all_equal_is_line_order():
    assert rank_lines_spectra({3: 0.2, 1: 0.2, 2: 0.2}) == [1, 2, 3]


def test_rank_by_score_then_line():
    assert rank_lines_spectra({3: 0.9, 1: 0.9, 2: 0.1}) == [1, 3, 2]


def test_rank_invariant_to_rescaling():
    scores = {1: 0.9, 2: 0.3, 3: 0.5, 4: 0.0}
    assert rank_lines_spectra(scores) == rank_lines_spectra(
        {k: 0.25 * v for k, v in scores.items()}
    )


def test_coverage_file_roundtrip(tmp_path):
    records = [
        rec("p1", "t0", "fail", {1, 2, 5}),
        rec("p1", "t1", "pass", {1, 2}),
        rec("p2", "t0", "pass", {3}),
    ]
    path = tmp_path / "coverage.txt"
    save_coverage(records, path)
    assert load_coverage(path) == records


def test_parse_coverage_line():
    r = parse_coverage_line("prog test fail 1,2,9")
    assert r.executed_lines == frozenset({1, 2, 9})
    with pytest.raises(ValueError):
        parse_coverage_line("too few fields")
