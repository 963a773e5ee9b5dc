"""Dataset manifests: tasks, tests, programs, and test outcomes.

The on-disk form is line-oriented text (diff-friendly, inspectable):

    note <free text>
    task <task_id>
    test <task_id> <test_id>
    program <task_id> <program_id> <author_id> <role> <relative path>
    result <program_id> <test_id> pass|fail

Structured objects are accepted anywhere a manifest is, so fixtures can
be built in memory without touching the filesystem.
"""

from dataclasses import dataclass, field
from pathlib import Path

from ..cparser import SourceProgram
from ..errors import ManifestInvalid

ROLES = ("correct", "buggy", "unknown")


@dataclass
class ProgramEntry:
    program_id: str
    task_id: str
    author_id: str
    role: str
    path: str


@dataclass
class DatasetManifest:
    tasks: dict = field(default_factory=dict)  # task_id -> [test_id, ...]
    programs: dict = field(default_factory=dict)  # program_id -> ProgramEntry
    results: dict = field(default_factory=dict)  # (program_id, test_id) -> outcome
    notes: list = field(default_factory=list)
    root: Path = Path(".")

    def tests_of(self, program_id):
        return self.tasks[self.programs[program_id].task_id]

    def outcomes_of(self, program_id):
        return {
            tid: self.results[(program_id, tid)]
            for tid in self.tests_of(program_id)
            if (program_id, tid) in self.results
        }

    def all_test_ids(self):
        out = []
        for task_id in sorted(self.tasks):
            out.extend(self.tasks[task_id])
        return out


def save_manifest(manifest, path):
    path = Path(path)
    with open(path, "w") as fh:
        for note in manifest.notes:
            fh.write(f"note {note}\n")
        for task_id in sorted(manifest.tasks):
            fh.write(f"task {task_id}\n")
            for test_id in manifest.tasks[task_id]:
                fh.write(f"test {task_id} {test_id}\n")
        for pid in sorted(manifest.programs):
            p = manifest.programs[pid]
            fh.write(f"program {p.task_id} {p.program_id} {p.author_id} {p.role} {p.path}\n")
        for (pid, tid) in sorted(manifest.results):
            fh.write(f"result {pid} {tid} {manifest.results[(pid, tid)]}\n")


def load_manifest(path):
    path = Path(path)
    manifest = DatasetManifest(root=path.parent)
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.rstrip("\n")
            if not raw.strip() or raw.startswith("#"):
                continue
            kind, _, rest = raw.partition(" ")
            try:
                if kind == "note":
                    manifest.notes.append(rest)
                elif kind == "task":
                    manifest.tasks.setdefault(rest.strip(), [])
                elif kind == "test":
                    task_id, test_id = rest.split()
                    manifest.tasks.setdefault(task_id, []).append(test_id)
                elif kind == "program":
                    task_id, pid, author, role, rel = rest.split()
                    manifest.programs[pid] = ProgramEntry(pid, task_id, author, role, rel)
                elif kind == "result":
                    pid, tid, outcome = rest.split()
                    manifest.results[(pid, tid)] = outcome
                else:
                    raise ValueError(f"unknown record kind {kind!r}")
            except ValueError as exc:
                raise ManifestInvalid(f"{path}:{lineno}: {exc}") from exc
    return manifest


def validate_manifest(manifest, check_paths=True):
    """Referential integrity plus role consistency checks."""
    for pid, entry in manifest.programs.items():
        if entry.task_id not in manifest.tasks:
            raise ManifestInvalid(f"program {pid}: unknown task {entry.task_id}")
        if entry.role not in ROLES:
            raise ManifestInvalid(f"program {pid}: unknown role {entry.role}")
        if check_paths and not (manifest.root / entry.path).exists():
            raise ManifestInvalid(f"program {pid}: missing file {entry.path}")
    test_ids = {(task, t) for task, tests in manifest.tasks.items() for t in tests}
    for (pid, tid), outcome in manifest.results.items():
        if pid not in manifest.programs:
            raise ManifestInvalid(f"result references unknown program {pid}")
        task = manifest.programs[pid].task_id
        if (task, tid) not in test_ids:
            raise ManifestInvalid(f"result ({pid}, {tid}): test not in task {task}")
        if outcome not in ("pass", "fail"):
            raise ManifestInvalid(f"result ({pid}, {tid}): bad outcome {outcome!r}")
    for pid, entry in manifest.programs.items():
        outcomes = list(manifest.outcomes_of(pid).values())
        if not outcomes:
            raise ManifestInvalid(f"program {pid}: no results")
        if entry.role == "correct" and "fail" in outcomes:
            raise ManifestInvalid(f"correct program {pid} fails a test")
        if entry.role == "buggy" and not (
                "fail" in outcomes and "pass" in outcomes):
            raise ManifestInvalid(
                f"buggy program {pid} must fail and pass at least one test each"
            )
    return manifest


def program_source(manifest, program_id):
    entry = manifest.programs[program_id]
    text = (manifest.root / entry.path).read_text()
    return SourceProgram(
        task_id=entry.task_id,
        program_id=entry.program_id,
        author_id=entry.author_id,
        text=text,
        role=entry.role,
    )


def load_results_file(path):
    """Bare results matrix: ``program_id test_id outcome`` per line."""
    results = {}
    with open(path) as fh:
        for raw in fh:
            raw = raw.strip()
            if not raw or raw.startswith("#"):
                continue
            pid, tid, outcome = raw.split()
            results[(pid, tid)] = outcome
    return results
