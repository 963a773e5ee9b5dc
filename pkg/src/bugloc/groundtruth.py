"""Bug-location ground truth from buggy/correct program pairs.

Line-wise differences come from difflib's longest-matching-block
matcher; replace/delete hunks mark their buggy-side lines as buggy,
insert hunks mark the preceding buggy-side line. For programs with
several hunks, each failing test is attributed to a minimal set of
hunks by running every partially fixed variant through an external
test runner (delta-debugging style subset enumeration).

The toolkit never compiles or runs C itself: runners are callables
``(program_text, test_id) -> bool`` (True = pass), typically wrapping
an external command or a precomputed results matrix.
"""

import difflib
from dataclasses import dataclass, field
from itertools import combinations

from .errors import RunnerFailure, TooManyHunks

MAX_HUNKS = 8
DEFAULT_DIFF_THRESHOLD = 5


@dataclass(frozen=True)
class DiffHunk:
    category: str  # insert | delete | replace
    buggy_lines: frozenset  # 1-indexed lines in the buggy program
    correct_lines: frozenset  # 1-indexed lines in the correct program
    buggy_span: tuple  # (i1, i2) 0-indexed slice into the buggy lines
    correct_span: tuple  # (j1, j2) 0-indexed slice into the correct lines
    correct_text: tuple = ()  # the correct-side lines, for patch application

    @property
    def insert_after(self):
        """For inserts: the buggy-side line the insertion follows (0 at top)."""
        return self.buggy_span[0]

    @property
    def size(self):
        """Buggy-side lines touched, plus inserted correct-side lines.

        An uneven replace (more correct lines than buggy lines) counts
        its surplus correct lines as insertions.
        """
        if self.category == "insert":
            return len(self.correct_lines)
        extra = max(0, len(self.correct_lines) - len(self.buggy_lines))
        return len(self.buggy_lines) + extra


@dataclass
class GroundTruth:
    program_id: str
    reference_id: str
    hunks: list
    buggy_line_set: frozenset
    causes: dict = field(default_factory=dict)  # test_id -> frozenset of lines


def _squash_ws(text):
    """Drop whitespace outside string/char literals; keep it inside."""
    out = []
    quote = ""
    i = 0
    while i < len(text):
        ch = text[i]
        if quote:
            out.append(ch)
            if ch == "\\" and i + 1 < len(text):
                out.append(text[i + 1])
                i += 2
                continue
            if ch == quote:
                quote = ""
        elif ch in "\"'":
            quote = ch
            out.append(ch)
        elif not ch.isspace():
            out.append(ch)
        i += 1
    return "".join(out)


def _is_whitespace_only(category, buggy_side, correct_side):
    if category == "replace":
        return [_squash_ws(l) for l in buggy_side] == [_squash_ws(l) for l in correct_side]
    lines = buggy_side if category == "delete" else correct_side
    return all(_squash_ws(l) == "" for l in lines)


def line_diff(buggy, correct):
    """Diff hunks between two programs (SourceProgram or raw text).

    Hunks whose two sides differ only in whitespace are dropped.
    """
    a = (buggy.text if hasattr(buggy, "text") else buggy).split("\n")
    b = (correct.text if hasattr(correct, "text") else correct).split("\n")
    matcher = difflib.SequenceMatcher(a=a, b=b, autojunk=False)
    hunks = []
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        if _is_whitespace_only(tag, a[i1:i2], b[j1:j2]):
            continue
        hunks.append(DiffHunk(
            category=tag,
            buggy_lines=frozenset(range(i1 + 1, i2 + 1)),
            correct_lines=frozenset(range(j1 + 1, j2 + 1)),
            buggy_span=(i1, i2),
            correct_span=(j1, j2),
            correct_text=tuple(b[j1:j2]),
        ))
    return hunks


def diff_size(hunks):
    return sum(h.size for h in hunks)


def mark_buggy_lines(hunks):
    """Union of delete/replace buggy lines plus insert anchors.

    An insertion at the very top of the file marks line 1.
    """
    lines = set()
    for h in hunks:
        if h.category == "insert":
            lines.add(max(h.insert_after, 1))
        else:
            lines.update(h.buggy_lines)
    return frozenset(lines)


def apply_hunks(buggy_text, selected):
    """Buggy program text with the selected hunks patched to the correct side."""
    out = buggy_text.split("\n")
    # apply bottom-up so earlier spans stay valid
    for h in sorted(selected, key=lambda h: h.buggy_span[0], reverse=True):
        i1, i2 = h.buggy_span
        out[i1:i2] = list(h.correct_text)
    return "\n".join(out)


def attribute_causes(buggy, correct, hunks, runner, tests):
    """Attribute each failing test to a minimal set of buggy lines.

    Builds every partially fixed variant (one per nonempty subset of
    unapplied hunks), runs all tests through ``runner``, and marks the
    remaining buggy lines of a variant as a cause for a test exactly when
    no variant with a strict subset of those hunks also fails the test.
    The result is independent of enumeration order.
    """
    if len(hunks) > MAX_HUNKS:
        raise TooManyHunks(f"{len(hunks)} hunks exceed the cap of {MAX_HUNKS}")
    buggy_text = buggy.text if hasattr(buggy, "text") else buggy
    if not hunks:
        return {}
    indices = tuple(range(len(hunks)))
    failing_sets = {t: [] for t in tests}
    for r in range(1, len(hunks) + 1):
        for remaining in combinations(indices, r):
            applied = [hunks[i] for i in indices if i not in remaining]
            text = apply_hunks(buggy_text, applied)
            for t in tests:
                try:
                    passed = runner(text, t)
                except RunnerFailure:
                    raise
                except Exception as exc:  # runner misbehaviour is not a crash
                    raise RunnerFailure(t, str(exc)) from exc
                if not passed:
                    failing_sets[t].append(frozenset(remaining))
    causes = {}
    for t, fails in failing_sets.items():
        minimal = [s for s in fails if not any(o < s for o in fails)]
        if minimal:
            lines = set()
            for s in minimal:
                lines |= mark_buggy_lines([hunks[i] for i in s])
            causes[t] = frozenset(lines)
    return causes


def select_evaluation_pairs(buggy_programs, correct_by_author,
                            threshold=DEFAULT_DIFF_THRESHOLD):
    """Keep buggy programs with a small same-author diff to some correct one.

    A buggy program is kept iff some author-matched correct program
    yields a diff of size strictly below ``threshold``; the reference
    minimizing the size wins, ties to the smaller program id. Causes are
    left empty for the caller to fill.
    """
    truths = []
    for buggy in buggy_programs:
        best = None
        for correct in sorted(correct_by_author.get(buggy.author_id, ()),
                              key=lambda p: p.program_id):
            hunks = line_diff(buggy, correct)
            size = diff_size(hunks)
            if size < threshold and (best is None or size < best[0]):
                best = (size, correct.program_id, hunks)
        if best is not None:
            _, reference_id, hunks = best
            truths.append(GroundTruth(
                program_id=buggy.program_id,
                reference_id=reference_id,
                hunks=hunks,
                buggy_line_set=mark_buggy_lines(hunks),
            ))
    return truths


def make_results_runner(results, program_id, buggy_text):
    """Runner backed by a precomputed (program_id, test_id) -> outcome map.

    Only the unmodified buggy program can be evaluated this way; any
    partially fixed variant needs live execution.
    """

    def run(text, test_id):
        if text != buggy_text:
            raise RunnerFailure(
                test_id, "results matrix cannot evaluate partially fixed variants"
            )
        try:
            return results[(program_id, test_id)] == "pass"
        except KeyError:
            raise RunnerFailure(test_id, f"no result for {program_id!r}")

    return run


# -- truth file io ---------------------------------------------------------------


def save_truths(truths, path):
    """Line-oriented truth file: buggy-line sets and per-test causes."""
    with open(path, "w") as fh:
        for gt in truths:
            lines = ",".join(str(x) for x in sorted(gt.buggy_line_set))
            fh.write(f"buggy {gt.program_id} {gt.reference_id} {lines}\n")
            for test_id in sorted(gt.causes):
                cause = ",".join(str(x) for x in sorted(gt.causes[test_id]))
                fh.write(f"cause {gt.program_id} {test_id} {cause}\n")


def load_truths(path):
    truths = {}
    with open(path) as fh:
        for raw in fh:
            raw = raw.strip()
            if not raw or raw.startswith("#"):
                continue
            parts = raw.split()
            if parts[0] == "buggy":
                _, pid, rid, lines = parts
                truths[pid] = GroundTruth(
                    program_id=pid,
                    reference_id=rid,
                    hunks=[],
                    buggy_line_set=frozenset(int(x) for x in lines.split(",") if x),
                )
            elif parts[0] == "cause":
                _, pid, tid, lines = parts
                truths[pid].causes[tid] = frozenset(int(x) for x in lines.split(",") if x)
            else:
                raise ValueError(f"bad truth record: {raw!r}")
    return truths
