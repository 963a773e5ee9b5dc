"""Training pair construction with caps, outlier removal, and splits."""

from dataclasses import dataclass, field

import numpy as np

from ..cparser import normalize_identifiers, parse_program
from ..encoder import build_vocabulary, corpus_schema, encode_program, fits_schema
from ..errors import ManifestInvalid
from .manifest import program_source, validate_manifest

DEFAULT_CAP = 700
DEFAULT_OUTLIER_FRACTION = 0.01
DEFAULT_VAL_FRACTION = 0.05


@dataclass
class PairDataset:
    train_pairs: list  # (program_id, test_id, label)
    val_pairs: list
    schema: object
    vocab: object
    encoded: dict  # program_id -> EncodedProgram
    test_index: dict  # test_id -> int
    n_tests: int
    dropped_outliers: list = field(default_factory=list)
    discarded_all_fail: list = field(default_factory=list)

    def to_training_triples(self, pairs=None):
        """(EncodedProgram, test_index, label) triples for the trainer."""
        pairs = self.train_pairs if pairs is None else pairs
        return [
            (self.encoded[pid], self.test_index[tid], label)
            for pid, tid, label in pairs
        ]


def build_pairs(manifest, cap=DEFAULT_CAP, outlier_fraction=DEFAULT_OUTLIER_FRACTION,
                val_fraction=DEFAULT_VAL_FRACTION, seed=0, exclude_pairs=(),
                source_provider=None, check_paths=True):
    """Build capped, seeded (program, test) pairs plus schema and vocabulary.

    Programs that fail every test are discarded. The largest programs by
    subtree count (``outlier_fraction``) set no schema bounds and are
    dropped. Per test, at most ``cap`` passing and ``cap`` failing
    programs are sampled without replacement. Pairs listed in
    ``exclude_pairs`` (held out for evaluation) never enter training or
    validation; the remaining pairs are split ``val_fraction`` for
    validation, disjoint from training.
    """
    validate_manifest(manifest, check_paths=check_paths)
    provider = source_provider or (lambda pid: program_source(manifest, pid))
    exclude = set(exclude_pairs)
    rng = np.random.default_rng(seed)

    discarded = []
    trees = {}
    for pid in sorted(manifest.programs):
        outcomes = manifest.outcomes_of(pid)
        if outcomes and all(o == "fail" for o in outcomes.values()):
            discarded.append(pid)
            continue
        trees[pid] = normalize_identifiers(parse_program(provider(pid)))

    if not trees:
        raise ManifestInvalid("no usable programs in manifest")
    ordered_ids = sorted(trees)
    schema = corpus_schema([trees[pid] for pid in ordered_ids], outlier_fraction)
    survivors = [pid for pid in ordered_ids if fits_schema(trees[pid], schema)]
    dropped = [pid for pid in ordered_ids if pid not in set(survivors)]
    vocab = build_vocabulary([trees[pid] for pid in survivors])
    encoded = {pid: encode_program(trees[pid], vocab, schema) for pid in survivors}

    test_ids = manifest.all_test_ids()
    test_index = {tid: i for i, tid in enumerate(test_ids)}

    by_task = {}
    for pid in survivors:
        by_task.setdefault(manifest.programs[pid].task_id, []).append(pid)

    pairs = []
    for task_id in sorted(manifest.tasks):
        candidates = by_task.get(task_id, [])
        for tid in manifest.tasks[task_id]:
            passing = [p for p in candidates if manifest.results.get((p, tid)) == "pass"]
            failing = [p for p in candidates if manifest.results.get((p, tid)) == "fail"]
            for group, label in ((passing, 1), (failing, 0)):
                chosen = group
                if len(group) > cap:
                    picks = rng.choice(len(group), size=cap, replace=False)
                    chosen = [group[i] for i in sorted(picks)]
                pairs.extend(
                    (pid, tid, label) for pid in chosen if (pid, tid) not in exclude
                )

    order = rng.permutation(len(pairs))
    n_val = int(len(pairs) * val_fraction)
    val_pairs = [pairs[i] for i in order[:n_val]]
    train_pairs = [pairs[i] for i in order[n_val:]]
    return PairDataset(
        train_pairs=train_pairs,
        val_pairs=val_pairs,
        schema=schema,
        vocab=vocab,
        encoded=encoded,
        test_index=test_index,
        n_tests=len(test_ids),
        dropped_outliers=dropped,
        discarded_all_fail=discarded,
    )
