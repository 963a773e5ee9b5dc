"""Top-k evaluation over ranked-line reports, plus the diff baseline.

Evaluation queries only the pairs the model classified correctly as
failing; misclassified pairs are counted separately. Three metrics per
cutoff k: pairs with a true cause line in the top k, distinct buggy
lines hit, and programs with at least one hit.
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..attribution import IGConfig, PoolProgram, localize
from ..errors import MissingGroundTruth, NotAFailure
from ..groundtruth import diff_size, line_diff, mark_buggy_lines
from ..tcnn import forward

DEFAULT_KS = (1, 5, 10)

WORKERS_ENV = "BUGLOC_WORKERS"


def worker_count(flag=None):
    if flag:
        return max(1, int(flag))
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


@dataclass
class RankedReport:
    """Technique-agnostic ranked-lines record for one (program, test) pair."""

    technique: str
    program_id: str
    test_id: str
    ranked_lines: list
    extra: dict = field(default_factory=dict)

    def to_json(self):
        payload = {
            "technique": self.technique,
            "program_id": self.program_id,
            "test_id": self.test_id,
            "ranked_lines": list(self.ranked_lines),
        }
        payload.update(self.extra)
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        known = {k: data.pop(k) for k in
                 ("technique", "program_id", "test_id", "ranked_lines")}
        return cls(extra=data, **known)


def attribution_to_ranked(report):
    return RankedReport(
        technique="attribution",
        program_id=report.program_id,
        test_id=report.test_id,
        ranked_lines=list(report.ranked_lines),
        extra={
            "baseline_id": report.baseline_id,
            "f_input": report.f_input,
            "f_baseline": report.f_baseline,
            "completeness_residual": report.completeness_residual,
            "steps": report.steps,
            "scanned": report.scanned,
            "line_scores": {str(k): v for k, v in report.line_scores.items()},
        },
    )


def save_reports(reports, path):
    """Machine-readable report stream: one JSON object per line."""
    with open(path, "w") as fh:
        for report in reports:
            fh.write(report.to_json() + "\n")


def load_reports(path):
    reports = []
    with open(path) as fh:
        for raw in fh:
            raw = raw.strip()
            if raw:
                reports.append(RankedReport.from_json(raw))
    return reports


@dataclass
class EvalResult:
    ks: tuple
    pairs_total: int
    lines_total: int
    programs_total: int
    pairs_hit: dict
    lines_hit: dict
    programs_hit: dict
    misclassified: int = 0

    def pct(self, metric, k):
        hit = getattr(self, f"{metric}_hit")[k]
        total = getattr(self, f"{metric}_total")
        return 100.0 * hit / total if total else 0.0

    def format_table(self, technique=""):
        lines = []
        header = f"{'metric':<10} {'queries':>8} " + " ".join(
            f"{'top-' + str(k):>14}" for k in self.ks
        )
        if technique:
            lines.append(f"technique: {technique}")
        lines.append(header)
        for metric in ("pairs", "lines", "programs"):
            total = getattr(self, f"{metric}_total")
            cells = []
            for k in self.ks:
                hit = getattr(self, f"{metric}_hit")[k]
                cells.append(f"{hit:>6} ({self.pct(metric, k):5.2f}%)")
            lines.append(f"{metric:<10} {total:>8} " + " ".join(cells))
        if self.misclassified:
            lines.append(f"misclassified pairs (not queried): {self.misclassified}")
        return "\n".join(lines)


def evaluate(reports, truths, ks=DEFAULT_KS, misclassified=0):
    """Score ranked-line reports against ground-truth causes."""
    ks = tuple(sorted(ks))
    pair_hits = {k: 0 for k in ks}
    line_universe = set()
    line_hits = {k: set() for k in ks}
    programs = set()
    program_hits = {k: set() for k in ks}
    for report in reports:
        pid, tid = report.program_id, report.test_id
        if pid not in truths:
            raise MissingGroundTruth(f"no ground truth for program {pid}")
        causes = truths[pid].causes.get(tid)
        if causes is None:
            raise MissingGroundTruth(f"no cause set for pair ({pid}, {tid})")
        programs.add(pid)
        line_universe.update((pid, line) for line in causes)
        for k in ks:
            hit = set(report.ranked_lines[:k]) & causes
            if hit:
                pair_hits[k] += 1
                program_hits[k].add(pid)
                line_hits[k].update((pid, line) for line in hit)
    return EvalResult(
        ks=ks,
        pairs_total=len(reports),
        lines_total=len(line_universe),
        programs_total=len(programs),
        pairs_hit=pair_hits,
        lines_hit={k: len(v) for k, v in line_hits.items()},
        programs_hit={k: len(v) for k, v in program_hits.items()},
        misclassified=misclassified,
    )


def diff_baseline(buggy, pool):
    """Rank lines by diffing against the minimal-diff pool program.

    The pool holds correct programs by other authors. Returns
    (reference_id, ranked lines ascending). An identical pool program
    yields an empty ranking.
    """
    from ..errors import EmptyPool

    if not pool:
        raise EmptyPool("diff baseline needs a pool of correct programs")
    best = None
    for candidate in sorted(pool, key=lambda p: p.program_id):
        hunks = line_diff(buggy, candidate)
        size = diff_size(hunks)
        if best is None or size < best[0]:
            best = (size, candidate.program_id, hunks)
    _, reference_id, hunks = best
    return reference_id, sorted(mark_buggy_lines(hunks))


@dataclass
class LocalizationRun:
    reports: list  # AttributionReport
    misclassified: list  # (program_id, test_id) predicted pass
    skipped: list  # (program_id, test_id) not encodable under the schema
    mean_scanned_fraction: float = 0.0


def run_localization(params, dataset, manifest, eval_pairs, cfg=IGConfig(),
                     index_by_task=None, cache=None, workers=1):
    """Localize every evaluation pair the model classifies as failing.

    ``dataset`` is a PairDataset (schema, vocabulary, encodings, test
    index). Pools contain the correct programs of each task that survived
    encoding. ``cache`` maps (program_id, test_id, baseline_id) to a
    previous AttributionReport; on a hit (same selected baseline) the
    cached credits are reused with the scan count updated.
    """
    from ..attribution import select_baseline

    pools = {}
    for pid, entry in manifest.programs.items():
        if entry.role == "correct" and pid in dataset.encoded:
            emb = forward(params, dataset.encoded[pid], 0)[1]
            pools.setdefault(entry.task_id, []).append(
                PoolProgram(pid, emb, dataset.encoded[pid])
            )
    for pool in pools.values():
        pool.sort(key=lambda p: p.program_id)

    reports = []
    misclassified = []
    skipped = []
    scanned = []

    def handle(pair):
        pid, tid = pair
        if pid not in dataset.encoded:
            return ("skip", pair, None)
        task_id = manifest.programs[pid].task_id
        encoded = dataset.encoded[pid]
        test_idx = dataset.test_index[tid]
        pool = pools.get(task_id, [])
        index = (index_by_task or {}).get(task_id)
        if cache is not None:
            p, emb = forward(params, encoded, test_idx)
            if p >= 0.5:
                return ("miss", pair, None)
            choice = select_baseline(emb, pool, index=index)
            key = (pid, tid, choice.program_id)
            if key in cache:
                import copy

                report = copy.copy(cache[key])
                report.scanned = choice.scanned
                return ("ok", pair, report)
        try:
            report = localize(params, pid, tid, encoded, test_idx, pool,
                              cfg=cfg, index=index)
        except NotAFailure:
            return ("miss", pair, None)
        if cache is not None:
            cache[(pid, tid, report.baseline_id)] = report
        return ("ok", pair, report)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool_exec:
            outcomes = list(pool_exec.map(handle, eval_pairs))
    else:
        outcomes = [handle(pair) for pair in eval_pairs]
    for status, pair, report in outcomes:
        if status == "ok":
            reports.append(report)
            pool_size = len(pools.get(manifest.programs[pair[0]].task_id, []))
            if pool_size:
                scanned.append(report.scanned / pool_size)
        elif status == "miss":
            misclassified.append(pair)
        else:
            skipped.append(pair)
    return LocalizationRun(
        reports=reports,
        misclassified=misclassified,
        skipped=skipped,
        mean_scanned_fraction=float(sum(scanned) / len(scanned)) if scanned else 0.0,
    )
