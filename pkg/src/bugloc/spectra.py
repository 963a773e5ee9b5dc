"""Spectrum-based fault localization baselines (Tarantula, Ochiai).

Coverage is ingested from files or structured records, never measured:
the toolkit does not compile or run C. Scoring always uses exactly one
failing test, paired with either one randomly chosen passing test
("one_passing") or all of them ("all_passing").
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoPassingTests

TECHNIQUES = ("tarantula", "ochiai")


@dataclass(frozen=True)
class CoverageRecord:
    program_id: str
    test_id: str
    outcome: str  # pass | fail
    executed_lines: frozenset

    def __post_init__(self):
        if self.outcome not in ("pass", "fail"):
            raise ValueError(f"bad outcome {self.outcome!r}")


@dataclass(frozen=True)
class SpectraQuery:
    program_id: str
    failing_test: str
    config: str = "all_passing"  # one_passing | all_passing
    seed: int = 0

    def __post_init__(self):
        if self.config not in ("one_passing", "all_passing"):
            raise ValueError(f"bad config {self.config!r}")


def _tarantula(ef, tf, ep, tp):
    ratio_f = ef / tf if tf else 0.0
    ratio_p = ep / tp if tp else 0.0
    denom = ratio_f + ratio_p
    return ratio_f / denom if denom > 0 else 0.0


def _ochiai(ef, tf, ep, tp):
    denom = math.sqrt(tf * (ef + ep))
    return ef / denom if denom > 0 else 0.0


def suspiciousness_scores(records, query, technique):
    """Per-line suspiciousness for one program and one failing test.

    ``records`` are the coverage records of a single program. Exactly one
    failing test is used (so tf = 1); the passing set follows the query
    config. Lines never executed by any selected test score 0.
    """
    if technique not in TECHNIQUES:
        raise ValueError(f"unknown technique {technique!r}")
    mine = [r for r in records if r.program_id == query.program_id]
    failing = [r for r in mine if r.test_id == query.failing_test]
    if len(failing) != 1:
        raise ValueError(
            f"expected one record for failing test {query.failing_test!r}, "
            f"found {len(failing)}"
        )
    if failing[0].outcome != "fail":
        raise ValueError(f"test {query.failing_test!r} did not fail")
    passing = sorted((r for r in mine if r.outcome == "pass"), key=lambda r: r.test_id)
    if query.config == "one_passing":
        if not passing:
            raise NoPassingTests(f"program {query.program_id!r} has no passing tests")
        rng = np.random.default_rng(query.seed)
        passing = [passing[rng.integers(len(passing))]]
    tf = 1
    tp = len(passing)
    universe = set()
    for r in mine:
        universe |= r.executed_lines
    formula = _tarantula if technique == "tarantula" else _ochiai
    scores = {}
    for line in sorted(universe):
        ef = 1 if line in failing[0].executed_lines else 0
        ep = sum(1 for r in passing if line in r.executed_lines)
        scores[line] = formula(ef, tf, ep, tp)
    return scores


def rank_lines_spectra(scores):
    """Lines by descending score, ties by ascending line number."""
    return [line for line, _ in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))]


def parse_coverage_line(text):
    parts = text.split()
    if len(parts) != 4:
        raise ValueError(f"bad coverage record: {text!r}")
    pid, tid, outcome, lines = parts
    executed = frozenset(int(x) for x in lines.split(",") if x)
    return CoverageRecord(pid, tid, outcome, executed)


def load_coverage(path):
    """Coverage file: ``program_id test_id outcome line,line,...`` per line."""
    records = []
    with open(path) as fh:
        for raw in fh:
            raw = raw.strip()
            if not raw or raw.startswith("#"):
                continue
            records.append(parse_coverage_line(raw))
    return records


def save_coverage(records, path):
    with open(path, "w") as fh:
        for r in records:
            lines = ",".join(str(x) for x in sorted(r.executed_lines))
            fh.write(f"{r.program_id} {r.test_id} {r.outcome} {lines}\n")
