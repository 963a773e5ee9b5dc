"""Command-line interface.

Subcommands cover the whole workflow: generate a synthetic corpus,
validate a manifest, train a model, predict single pairs, localize bugs
with attribution, run the spectrum baselines, derive ground truth, build
cluster indexes, and score ranked-line reports against ground truth.
All randomized steps take --seed. BUGLOC_WORKERS (or --workers) bounds
the worker pool for per-pair attribution work.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import attribution as attr
from . import groundtruth as gt
from . import spectra as sp
from . import tcnn
from .cparser import normalize_identifiers, parse_program
from .encoder import Vocabulary, encode_program
from .errors import BuglocError
from .workbench import (
    RankedReport,
    attribution_to_ranked,
    build_pairs,
    diff_baseline,
    evaluate,
    gen_synth,
    load_manifest,
    load_reports,
    load_results_file,
    program_source,
    run_localization,
    save_reports,
    validate_manifest,
    worker_count,
)
from .workbench.synth import load_eval_pairs


def _vocab_path(ckpt_path):
    return Path(ckpt_path).with_suffix(".vocab")


def _load_model(ckpt_path):
    vocab = Vocabulary.load(_vocab_path(ckpt_path))
    params = tcnn.load_checkpoint(ckpt_path, vocabulary=vocab)
    return params, vocab


def _encode_source(text, vocab, schema):
    tree = normalize_identifiers(parse_program(text))
    return encode_program(tree, vocab, schema)


def cmd_gen_synth(args):
    corpus = gen_synth(args.out, programs_per_task=args.programs_per_task,
                       seed=args.seed)
    m = corpus.manifest
    print(f"wrote {len(m.programs)} programs across {len(m.tasks)} tasks to {args.out}")
    print(f"results: {len(m.results)}, evaluation pairs: {len(corpus.eval_pairs)}")


def cmd_ingest(args):
    manifest = validate_manifest(load_manifest(args.manifest))
    roles = {}
    for entry in manifest.programs.values():
        roles[entry.role] = roles.get(entry.role, 0) + 1
    print(f"manifest ok: {len(manifest.tasks)} tasks, "
          f"{len(manifest.programs)} programs {roles}, {len(manifest.results)} results")


def cmd_train(args):
    manifest = validate_manifest(load_manifest(args.manifest))
    exclude = load_eval_pairs(args.exclude_pairs) if args.exclude_pairs else ()
    dataset = build_pairs(manifest, cap=args.cap,
                          outlier_fraction=args.outlier_fraction,
                          val_fraction=args.val_fraction, seed=args.seed,
                          exclude_pairs=exclude)
    print(f"pairs: {len(dataset.train_pairs)} train / {len(dataset.val_pairs)} val; "
          f"schema {dataset.schema.max_subtrees}x{dataset.schema.max_nodes}; "
          f"vocabulary {len(dataset.vocab)} tokens")
    cfg = tcnn.TrainConfig(lr=args.lr, epochs=args.epochs, batch_size=args.batch,
                           seed=args.seed, stop_at_val_acc=args.stop_at_val_acc)
    params, log = tcnn.train(
        dataset.to_training_triples(), dataset.schema, len(dataset.vocab),
        dataset.n_tests, cfg=cfg, vocab_hash=dataset.vocab.hash64(),
        val_pairs=dataset.to_training_triples(dataset.val_pairs),
        log_fn=lambda e: print(
            f"epoch {e.epoch}: loss {e.train_loss:.4f} "
            f"train {e.train_acc:.3f} val {e.val_acc:.3f}"),
    )
    tcnn.save_checkpoint(params, args.out)
    dataset.vocab.save(_vocab_path(args.out))
    best = max(e.val_acc for e in log)
    print(f"saved {args.out} (+ .vocab); best validation accuracy {best:.4f}")


def cmd_predict(args):
    params, vocab = _load_model(args.ckpt)
    text = Path(args.program).read_text()
    encoded = _encode_source(text, vocab, params.schema)
    result = tcnn.predict(params, encoded, args.test)
    print(f"{result.outcome} p_pass={result.p_pass:.4f}")


def _pool_from_manifest(params, vocab, manifest, task_id, exclude_author=None):
    pool = []
    for pid in sorted(manifest.programs):
        entry = manifest.programs[pid]
        if entry.task_id != task_id or entry.role != "correct":
            continue
        if exclude_author and entry.author_id == exclude_author:
            continue
        try:
            encoded = _encode_source(program_source(manifest, pid).text,
                                     vocab, params.schema)
        except BuglocError:
            continue
        emb = tcnn.forward(params, encoded, 0)[1]
        pool.append(attr.PoolProgram(pid, emb, encoded))
    return pool


def cmd_localize(args):
    params, vocab = _load_model(args.ckpt)
    manifest = load_manifest(args.pool)
    text = Path(args.program).read_text()
    program_id = Path(args.program).stem
    task_id = args.task or next(
        (e.task_id for e in manifest.programs.values()
         if e.program_id == program_id), None)
    if task_id is None:
        raise BuglocError(f"cannot infer task for {program_id}; pass --task")
    encoded = _encode_source(text, vocab, params.schema)
    pool = _pool_from_manifest(params, vocab, manifest, task_id)
    index = None
    if args.clusters:
        index = attr.build_cluster_index(pool, k=args.clusters, seed=args.seed)
    cfg = attr.IGConfig(steps=args.steps)
    report = attr.localize(params, program_id, str(args.test), encoded,
                           args.test, pool, cfg=cfg, index=index,
                           absolute=args.absolute)
    if args.json:
        print(attribution_to_ranked(report).to_json())
        return
    print(f"pair: ({report.program_id}, test {report.test_id})")
    print(f"baseline: {report.baseline_id} "
          f"(F_input={report.f_input:.4f}, F_baseline={report.f_baseline:.4f})")
    print("line  score        rank")
    for rank, line in enumerate(report.ranked_lines[: args.topk], start=1):
        print(f"{line:>4}  {report.line_scores[line]: .6f}  {rank:>4}")


def cmd_spectra(args):
    records = sp.load_coverage(args.coverage)
    config = "one_passing" if args.config == "one" else "all_passing"
    query = sp.SpectraQuery(args.program, args.test, config, seed=args.seed)
    scores = sp.suspiciousness_scores(records, query, args.technique)
    ranked = sp.rank_lines_spectra(scores)
    if args.json:
        report = RankedReport(args.technique, args.program, args.test,
                              ranked[: args.topk] if args.topk else ranked,
                              {"config": args.config})
        print(report.to_json())
        return
    print("line  score        rank")
    for rank, line in enumerate(ranked[: args.topk] if args.topk else ranked, 1):
        print(f"{line:>4}  {scores[line]: .6f}  {rank:>4}")


def cmd_ground_truth(args):
    buggy_text = Path(args.buggy).read_text()
    correct_text = Path(args.correct).read_text()
    hunks = gt.line_diff(buggy_text, correct_text)
    marked = gt.mark_buggy_lines(hunks)
    print(f"hunks: {len(hunks)} (diff size {gt.diff_size(hunks)})")
    for h in hunks:
        print(f"  {h.category}: buggy {sorted(h.buggy_lines) or '-'} "
              f"correct {sorted(h.correct_lines) or '-'}")
    print(f"buggy lines: {sorted(marked)}")
    if not args.tests:
        return
    tests = args.tests.split(",")
    if args.runner:
        import subprocess
        import tempfile

        def runner(text, test_id):
            with tempfile.NamedTemporaryFile("w", suffix=".c", delete=False) as fh:
                fh.write(text)
                path = fh.name
            proc = subprocess.run([args.runner, path, str(test_id)],
                                  capture_output=True)
            if proc.returncode == 0:
                return True
            if proc.returncode == 1:
                return False
            raise gt.RunnerFailure(test_id, f"exit status {proc.returncode}")
    elif args.results:
        results = load_results_file(args.results)
        runner = gt.make_results_runner(results, Path(args.buggy).stem, buggy_text)
    else:
        raise BuglocError("cause attribution needs --runner or --results")
    causes = gt.attribute_causes(buggy_text, correct_text, hunks, runner, tests)
    for test_id in tests:
        lines = sorted(causes.get(test_id, ()))
        print(f"cause {test_id}: {lines or '-'}")


def cmd_cluster(args):
    params, vocab = _load_model(args.ckpt)
    manifest = load_manifest(args.pool)
    for task_id in sorted(manifest.tasks):
        pool = _pool_from_manifest(params, vocab, manifest, task_id)
        if len(pool) < args.clusters:
            print(f"{task_id}: pool of {len(pool)} too small for K={args.clusters}")
            continue
        index = attr.build_cluster_index(pool, k=args.clusters, seed=args.seed)
        sizes = sorted((len(m) for m in index.members), reverse=True)
        print(f"{task_id}: {len(pool)} correct programs, cluster sizes {sizes}")


def cmd_eval(args):
    truths = gt.load_truths(args.truth)
    ks = tuple(int(k) for k in args.k.split(","))
    for path in args.reports:
        reports = load_reports(path)
        by_technique = {}
        for r in reports:
            by_technique.setdefault(r.technique, []).append(r)
        for technique, group in sorted(by_technique.items()):
            result = evaluate(group, truths, ks=ks)
            print(result.format_table(technique=f"{technique} ({path})"))
            print()


def cmd_localize_all(args):
    """Localize every designated evaluation pair and write a report file."""
    params, vocab = _load_model(args.ckpt)
    manifest = validate_manifest(load_manifest(args.manifest))
    pairs = load_eval_pairs(args.pairs)
    dataset = build_pairs(manifest, seed=args.seed, exclude_pairs=pairs,
                          outlier_fraction=args.outlier_fraction)
    index_by_task = None
    if args.clusters:
        from .attribution import PoolProgram, build_cluster_index

        index_by_task = {}
        for task_id in sorted(manifest.tasks):
            pool = [
                PoolProgram(pid, tcnn.forward(params, dataset.encoded[pid], 0)[1],
                            dataset.encoded[pid])
                for pid in sorted(manifest.programs)
                if manifest.programs[pid].role == "correct"
                and manifest.programs[pid].task_id == task_id
                and pid in dataset.encoded
            ]
            if len(pool) >= args.clusters:
                index_by_task[task_id] = build_cluster_index(
                    pool, k=args.clusters, seed=args.seed)
    run = run_localization(params, dataset, manifest, pairs,
                           cfg=attr.IGConfig(steps=args.steps),
                           index_by_task=index_by_task,
                           workers=worker_count(args.workers))
    save_reports([attribution_to_ranked(r) for r in run.reports], args.out)
    print(f"localized {len(run.reports)} pairs "
          f"({len(run.misclassified)} misclassified, {len(run.skipped)} skipped); "
          f"mean scanned fraction {run.mean_scanned_fraction:.3f}")
    print(f"wrote {args.out}")


def build_parser():
    parser = argparse.ArgumentParser(prog="bugloc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--programs-per-task", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_gen_synth)

    p = sub.add_parser("ingest", help="validate a dataset manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("train", help="train the tree convolutional model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=700)
    p.add_argument("--outlier-fraction", type=float, default=0.01)
    p.add_argument("--val-fraction", type=float, default=0.05)
    p.add_argument("--stop-at-val-acc", type=float, default=None)
    p.add_argument("--exclude-pairs", default=None,
                   help="file of 'program_id test_id' pairs to hold out")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("predict", help="predict pass/fail for one pair")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--program", required=True)
    p.add_argument("--test", type=int, required=True,
                   help="global test index (position in the manifest test list)")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("localize", help="attribute a failing pair to lines")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--program", required=True)
    p.add_argument("--test", type=int, required=True)
    p.add_argument("--pool", required=True, help="manifest providing correct programs")
    p.add_argument("--task", default=None)
    p.add_argument("--clusters", type=int, default=0, help="K for clustered search")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--topk", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--absolute", action="store_true",
                   help="rank by absolute credit value")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_localize)

    p = sub.add_parser("spectra", help="Tarantula/Ochiai over coverage data")
    p.add_argument("--coverage", required=True)
    p.add_argument("--program", required=True)
    p.add_argument("--test", required=True, help="failing test id")
    p.add_argument("--technique", choices=("tarantula", "ochiai"), required=True)
    p.add_argument("--config", choices=("one", "all"), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--topk", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_spectra)

    p = sub.add_parser("ground-truth", help="diff-based bug lines and causes")
    p.add_argument("--buggy", required=True)
    p.add_argument("--correct", required=True)
    p.add_argument("--runner", default=None,
                   help="command invoked as: RUNNER program.c test_id")
    p.add_argument("--results", default=None, help="precomputed results matrix file")
    p.add_argument("--tests", default=None, help="comma-separated test ids")
    p.set_defaults(fn=cmd_ground_truth)

    p = sub.add_parser("cluster", help="cluster correct-program embeddings per task")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--pool", required=True, help="manifest providing correct programs")
    p.add_argument("--K", dest="clusters", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_cluster)

    p = sub.add_parser("eval", help="score ranked-line reports against ground truth")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--k", default="1,5,10")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("localize-all", help="localize a file of evaluation pairs")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--pairs", required=True, help="file of 'program_id test_id' lines")
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--clusters", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outlier-fraction", type=float, default=0.01)
    p.add_argument("--workers", type=int, default=0)
    p.set_defaults(fn=cmd_localize_all)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.fn(args)
    except (BuglocError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
