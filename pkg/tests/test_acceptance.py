"""Acceptance suite: one test per criterion, printed pass/fail per line.

Run with ``pytest tests/test_acceptance.py -v -s``. The synthetic
end-to-end criteria share one session-scoped corpus/training run.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from bugloc.attribution import (
    IGConfig,
    PoolProgram,
    build_cluster_index,
    integrated_gradients,
    integrated_gradients_over,
)
from bugloc.cparser import normalize_identifiers, parse_program
from bugloc.encoder import build_vocabulary, corpus_schema, encode_program, flatten_bfs
from bugloc.groundtruth import attribute_causes, line_diff
from bugloc.nnkernel import (
    Tensor,
    binary_cross_entropy,
    concat,
    dense,
    embedding_lookup,
    global_max_pool,
    relu,
    reshape,
    row_convolution,
    tensor_sum,
)
from bugloc.tcnn import TrainConfig, forward, save_checkpoint, train
from bugloc.workbench import (
    attribution_to_ranked,
    build_pairs,
    evaluate,
    gen_synth,
    run_localization,
)
from tests.test_groundtruth import brute_force_causes, scripted_runner
from tests.test_nnkernel import finite_difference, rel_err

FIXTURE = json.loads(
    (Path(__file__).parent / "fixtures" / "fig3_encoding.json").read_text()
)

SEED_CORPUS = 42
SEED_TRAIN = 1


def report(criterion, detail):
    print(f"\nACCEPTANCE {criterion}: PASS - {detail}")


# -- shared synthetic end-to-end run (criteria 4, 5, 8) ---------------------------


class SynthRun:
    def __init__(self, tmp_dir):
        t_start = time.time()
        self.corpus = gen_synth(tmp_dir, programs_per_task=400, seed=SEED_CORPUS)
        self.dataset = build_pairs(self.corpus.manifest, seed=7,
                                   exclude_pairs=self.corpus.eval_pairs)
        cfg = TrainConfig(lr=1e-4, epochs=50, batch_size=32, seed=SEED_TRAIN,
                          stop_at_val_acc=0.99)
        self.params, self.log = train(
            self.dataset.to_training_triples(),
            self.dataset.schema, len(self.dataset.vocab), self.dataset.n_tests,
            cfg=cfg, vocab_hash=self.dataset.vocab.hash64(),
            val_pairs=self.dataset.to_training_triples(self.dataset.val_pairs),
        )
        self.best_val = max(e.val_acc for e in self.log)
        self.cache = {}
        self.exhaustive = run_localization(
            self.params, self.dataset, self.corpus.manifest,
            self.corpus.eval_pairs, cfg=IGConfig(steps=100), cache=self.cache,
        )
        self.elapsed = time.time() - t_start

    def pools_by_task(self):
        pools = {}
        m = self.corpus.manifest
        for pid in sorted(m.programs):
            entry = m.programs[pid]
            if entry.role == "correct" and pid in self.dataset.encoded:
                emb = forward(self.params, self.dataset.encoded[pid], 0)[1]
                pools.setdefault(entry.task_id, []).append(
                    PoolProgram(pid, emb, self.dataset.encoded[pid])
                )
        return pools


@pytest.fixture(scope="session")
def synth_run(tmp_path_factory):
    return SynthRun(tmp_path_factory.mktemp("acceptance_corpus"))


# -- criterion 1: encoding fidelity ------------------------------------------------


def test_criterion_1_encoding_fidelity():
    t0 = time.time()
    root = normalize_identifiers(parse_program(FIXTURE["snippet"]))
    tree = root.children[0]
    rows = flatten_bfs(tree)
    assert [[n.token for n in row] for row in rows] == FIXTURE["token_rows"]
    assert [row[0].kind for row in rows] == ["Decl", "TypeDecl", "UnaryOp", "BinaryOp"]
    vocab = build_vocabulary([tree])
    schema = corpus_schema([tree])
    assert vocab.tokens == FIXTURE["vocabulary"]
    assert (schema.max_subtrees, schema.max_nodes) == (
        FIXTURE["schema"]["max_subtrees"], FIXTURE["schema"]["max_nodes"])
    enc = encode_program(tree, vocab, schema)
    assert enc.matrix.tolist() == FIXTURE["matrix"]
    assert enc.cell_line.tolist() == FIXTURE["cell_line"]
    elapsed = time.time() - t0
    assert elapsed < 1.0
    report(1, f"four-row matrix encoding bit-exact vs fixture ({elapsed:.3f}s)")


# -- criterion 2: gradient correctness ----------------------------------------------


def _margin_ok(*tensors, h=1e-5):
    return all(np.min(np.abs(t)) > 50 * h for t in tensors)


def test_criterion_2_gradient_correctness():
    t0 = time.time()
    tol = 1e-4
    checked = 0
    rng = np.random.default_rng(202408)

    def check(build, tensors):
        nonlocal checked
        loss = build()
        loss.backward()
        for t in tensors:
            fd = finite_difference(lambda: float(build().data), t.data)
            assert rel_err(t.grad, fd) < tol
        checked += 1

    for _ in range(20):  # embedding lookup
        table = Tensor(rng.normal(size=(6, 3)), requires_grad=True)
        idx = rng.integers(1, 6, size=(3, 2))
        check(lambda: tensor_sum(embedding_lookup(table, idx)), [table])

    for _ in range(5):  # row convolution across the used geometries
        for k, s in ((1, 1), (3, 3), (3, 1), (2, 2)):
            R = k + 2 * s
            inp = Tensor(rng.normal(size=(R, 2, 2)), requires_grad=True)
            filt = Tensor(rng.normal(size=(3, k * 4)) * 0.4, requires_grad=True)
            bias = Tensor(rng.normal(size=3) * 0.2, requires_grad=True)
            check(lambda: tensor_sum(row_convolution(inp, k, s, filt, bias)),
                  [inp, filt, bias])

    for _ in range(7):  # dense with every activation
        for act in ("none", "relu", "sigmoid"):
            while True:
                x = rng.normal(size=4)
                W = rng.normal(size=(3, 4))
                b = rng.normal(size=3)
                if act != "relu" or _margin_ok(x @ W.T + b):
                    break
            inp = Tensor(x, requires_grad=True)
            check(lambda: tensor_sum(dense(inp, Tensor(W, requires_grad=True),
                                           Tensor(b, requires_grad=True), act)),
                  [inp])

    for _ in range(20):  # max pool away from ties
        while True:
            x = rng.normal(size=(5, 3))
            top2 = np.sort(x, axis=0)[-2:]
            if np.min(top2[1] - top2[0]) > 1e-3:
                break
        inp = Tensor(x, requires_grad=True)
        check(lambda: tensor_sum(global_max_pool(inp)), [inp])

    for _ in range(10):  # concat + reshape + relu compositions
        a = Tensor(rng.normal(size=(2, 3)) + 2.0, requires_grad=True)
        b = Tensor(rng.normal(size=(2, 2)) + 2.0, requires_grad=True)
        check(lambda: tensor_sum(relu(reshape(concat([a, b], axis=-1), (10,)))),
              [a, b])

    for _ in range(15):  # bce on probabilities
        p = Tensor(rng.uniform(0.05, 0.95, size=4), requires_grad=True)
        y = rng.integers(0, 2, size=4).astype(float)
        check(lambda: binary_cross_entropy(p, y), [p])

    # composed network loss, float64, all parameters and embeddings;
    # margins are verified with an independent numpy re-derivation of the
    # pre-activations so no relu/pool/clip sits within reach of the
    # finite-difference step
    from tests.test_tcnn import encode_rows, tiny_params
    from bugloc.tcnn import forward_batch

    def composed_margins(params, matrix, tid):
        emb = params.node_embedding.data[matrix]  # (R, C, de)
        z0 = emb @ params.conv_node_w.data.T + params.conv_node_b.data
        a0 = np.maximum(z0, 0)
        R, C, F0 = a0.shape
        rows = a0.reshape(R, C * F0)
        z1 = rows @ params.conv_1row_w.data.T + params.conv_1row_b.data
        a1 = np.maximum(z1, 0)
        blocks = a0.reshape(R // 3, 3 * C * F0)
        z3 = blocks @ params.conv_3row_w.data.T + params.conv_3row_b.data
        a3 = np.maximum(z3, 0)
        gaps = []
        for act in (a1, a3):
            top2 = np.sort(act, axis=0)[-2:]
            gaps.append(np.min(top2[1] - top2[0]))
        prog = np.concatenate([a1.max(axis=0), a3.max(axis=0)])
        joined = np.concatenate([prog, params.testid_embedding.data[tid]])
        zd1 = joined @ params.dense1_w.data.T + params.dense1_b.data
        hd1 = np.maximum(zd1, 0)
        zd2 = hd1 @ params.dense2_w.data.T + params.dense2_b.data
        hd2 = np.maximum(zd2, 0)
        zo = hd2 @ params.out_w.data.T + params.out_b.data
        p = 1.0 / (1.0 + np.exp(-zo))
        relu_margin = min(np.min(np.abs(z)) for z in (z0, z1, z3, zd1, zd2))
        return relu_margin, min(gaps), float(np.min(np.abs(p - 0.5))), p

    program = encode_rows([[2, 3, 4], [5, 6], [7, 8, 9]])
    done = 0
    jitter_seed = 50
    while done < 4:
        params = tiny_params(seed=done)
        jitter = np.random.default_rng(jitter_seed)
        jitter_seed += 1
        for _, tensor in params.named_tensors():
            tensor.data += jitter.normal(scale=0.05, size=tensor.shape)
        params.node_embedding.data[0] = 0
        tid = done % 3
        relu_margin, pool_gap, _, p = composed_margins(params, program.matrix, tid)
        if relu_margin < 1e-3 or pool_gap < 1e-3:
            continue
        seed = done
        done += 1
        mats, tids = program.matrix[None], np.array([tid])
        labels = np.array([float(seed % 2)])
        # the independent re-derivation doubles as a forward oracle
        assert np.allclose(p.ravel(), forward_batch(params, mats, tids).data,
                           rtol=1e-12, atol=0)

        def loss_fn():
            return binary_cross_entropy(forward_batch(params, mats, tids), labels)

        loss = loss_fn()
        loss.backward()
        for name, tensor in params.named_tensors():
            fd = finite_difference(lambda: float(loss_fn().data), tensor.data)
            if name == "node_embedding":
                fd[0] = 0
            grad = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
            assert rel_err(grad, fd) < tol, name
        checked += 1

    elapsed = time.time() - t0
    assert checked >= 100
    assert elapsed < 120
    report(2, f"{checked} gradient configurations < {tol} rel err ({elapsed:.1f}s)")


# -- criterion 3: IG exactness on a linear probe --------------------------------------


def test_criterion_3_linear_probe_exactness():
    rng = np.random.default_rng(7)
    shape = (5, 4, 6)
    w = rng.normal(size=shape)
    e = rng.normal(size=shape)
    base = rng.normal(size=shape)

    def linear(batch):
        flat = reshape(batch, (batch.shape[0], w.size))
        return dense(flat, Tensor(w.reshape(1, -1)), Tensor(np.zeros(1)), "none")

    expected = w * (e - base)
    worst = 0.0
    for steps in (1, 10, 100):
        ig = integrated_gradients_over(linear, e, base, steps)
        worst = max(worst, float(np.max(np.abs(ig - expected))))
    assert worst < 1e-9
    report(3, f"linear-probe attributions exact to {worst:.2e} for m in {{1,10,100}}")


# -- criterion 4: IG completeness ------------------------------------------------------


def test_criterion_4_completeness(synth_run):
    reports = synth_run.exhaustive.reports
    assert reports, "no attributions produced"
    worst_ratio = 0.0
    for r in reports:
        delta = abs(r.f_input - r.f_baseline)
        budget = 0.02 * delta + 1e-4
        assert r.completeness_residual <= budget, (
            f"completeness violated on ({r.program_id}, {r.test_id}): "
            f"residual {r.completeness_residual:.6f} > {budget:.6f}"
        )
        if budget:
            worst_ratio = max(worst_ratio, r.completeness_residual / budget)
    # Riemann refinement on a subset: coarser grids cannot beat finer ones
    pools = synth_run.pools_by_task()
    subset = reports[:: max(1, len(reports) // 25)][:25]
    residuals = {25: [], 200: []}
    for r in subset:
        encoded = synth_run.dataset.encoded[r.program_id]
        baseline = next(
            p.encoded for p in pools[synth_run.corpus.manifest.programs[r.program_id].task_id]
            if p.program_id == r.baseline_id
        )
        tidx = synth_run.dataset.test_index[r.test_id]
        for m in (25, 200):
            res = integrated_gradients(synth_run.params, encoded, baseline, tidx,
                                       IGConfig(steps=m))
            residuals[m].append(res.completeness_residual)
    mean25 = float(np.mean(residuals[25]))
    mean200 = float(np.mean(residuals[200]))
    assert mean200 <= mean25
    report(4, f"completeness on {len(reports)} attributions "
              f"(worst {100 * worst_ratio:.1f}% of budget); "
              f"mean residual m=200 {mean200:.2e} <= m=25 {mean25:.2e}")


# -- criterion 5: end-to-end synthetic localization -------------------------------------


def test_criterion_5_end_to_end(synth_run):
    assert synth_run.best_val >= 0.95, (
        f"validation accuracy {synth_run.best_val:.4f} < 0.95"
    )
    reports = synth_run.exhaustive.reports
    assert len(reports) >= 200, f"only {len(reports)} correctly classified failing pairs"
    result = evaluate([attribution_to_ranked(r) for r in reports],
                      synth_run.corpus.truths, ks=(1, 5, 10))
    top5 = result.pct("pairs", 5)
    top10 = result.pct("pairs", 10)
    assert top5 >= 70.0, f"top-5 localization {top5:.2f}% < 70%"
    assert top10 >= 80.0, f"top-10 localization {top10:.2f}% < 80%"
    assert synth_run.elapsed <= 1800, f"end-to-end run took {synth_run.elapsed:.0f}s"
    report(5, f"val acc {synth_run.best_val:.3f} ({len(synth_run.log)} epochs); "
              f"{len(reports)} pairs localized: top-5 {top5:.1f}%, "
              f"top-10 {top10:.1f}% ({synth_run.elapsed:.0f}s total)")


# -- criterion 6: spectra oracle equivalence ---------------------------------------------


def test_criterion_6_spectra_exactness():
    from bugloc.spectra import CoverageRecord, SpectraQuery, suspiciousness_scores

    def rec(tid, outcome, lines):
        return CoverageRecord("p", tid, outcome, frozenset(lines))

    # ef=1, tf=1, ep=1, tp=1
    records = [rec("tf", "fail", {4}), rec("tp", "pass", {4})]
    q = SpectraQuery("p", "tf", "all_passing")
    assert suspiciousness_scores(records, q, "tarantula")[4] == 0.5
    assert suspiciousness_scores(records, q, "ochiai")[4] == 1 / math.sqrt(2)

    # direct formula evaluation over assorted fixtures
    import itertools

    checked = 0
    for n_pass, pattern in itertools.product(range(1, 4), range(8)):
        records = [rec("tf", "fail", {1, 2})]
        for i in range(n_pass):
            lines = {1} if (pattern >> i) & 1 else {2}
            records.append(rec(f"tp{i}", "pass", lines))
        for technique in ("tarantula", "ochiai"):
            scores = suspiciousness_scores(records, q, technique)
            for line in (1, 2):
                ef = 1
                ep = sum(1 for r in records[1:] if line in r.executed_lines)
                tp = n_pass
                if technique == "tarantula":
                    expected = (ef / 1) / (ef / 1 + (ep / tp if tp else 0))
                else:
                    expected = ef / math.sqrt(1 * (ef + ep))
                assert scores[line] == expected
                checked += 1
    report(6, f"Tarantula/Ochiai match direct formula evaluation on {checked} cases")


# -- criterion 7: ground-truth causal attribution ------------------------------------------


def test_criterion_7_cause_attribution_oracle():
    cases = 0
    for n_hunks, fails in [
        (1, {"t1": lambda s: "bug1" in s}),
        (2, {"t1": lambda s: "bug1" in s, "t2": lambda s: {"bug1", "bug2"} <= s}),
        (3, {"t1": lambda s: "bug2" in s or "bug3" in s,
             "t2": lambda s: len(s) == 3, "t3": lambda s: "bug1" in s}),
        (4, {"t1": lambda s: {"bug1", "bug3"} <= s, "t2": lambda s: "bug4" in s,
             "t3": lambda s: len(s) >= 2, "t4": lambda s: "bug2" in s and "bug4" in s}),
    ]:
        buggy_lines, correct_lines = [], []
        for i in range(1, n_hunks + 1):
            buggy_lines += [f"ctx{i}", f"bug{i}"]
            correct_lines += [f"ctx{i}", f"fix{i}"]
        buggy = "\n".join(buggy_lines)
        correct = "\n".join(correct_lines)
        hunks = line_diff(buggy, correct)
        assert len(hunks) == n_hunks
        runner = scripted_runner(
            {"markers": [f"bug{i}" for i in range(1, n_hunks + 1)], "fails": fails})
        tests = sorted(fails)
        mine = attribute_causes(buggy, correct, hunks, runner, tests)
        oracle = brute_force_causes(buggy, hunks, runner, tests)
        assert mine == oracle
        cases += 1

    # two-hunk fixture with bugs marked at lines 9 and 10: a wrong line at 9
    # (replace) and code missing after line 10 (insert anchors on line 10).
    # t1 fails while hunk A is unapplied; t2 only while both are unapplied.
    buggy = "\n".join(["head"] * 8 + ["bugA", "ctx", "tail"])
    correct = "\n".join(["head"] * 8 + ["fixA", "ctx", "missing", "tail"])
    hunks = line_diff(buggy, correct)
    assert [h.category for h in hunks] == ["replace", "insert"]

    def runner(text, test_id):
        if test_id == "t1":
            return "bugA" not in text
        return ("bugA" not in text) or ("missing" in text)

    causes = attribute_causes(buggy, correct, hunks, runner, ["t1", "t2"])
    assert causes["t1"] == frozenset({9})
    assert causes["t2"] == frozenset({9, 10})
    report(7, f"cause attribution equals brute-force oracle on {cases} fixtures "
              f"(h<=4) and resolves the two-hunk fixture minimally")


# -- criterion 8: clustered baseline search ---------------------------------------------


def test_criterion_8_clustered_search(synth_run):
    pools = synth_run.pools_by_task()
    index_by_task = {
        task_id: build_cluster_index(pool, k=5, seed=0)
        for task_id, pool in pools.items()
    }
    clustered = run_localization(
        synth_run.params, synth_run.dataset, synth_run.corpus.manifest,
        synth_run.corpus.eval_pairs, cfg=IGConfig(steps=100),
        index_by_task=index_by_task, cache=synth_run.cache,
    )
    frac = clustered.mean_scanned_fraction
    assert frac <= 0.25, f"clustered search scans {100 * frac:.1f}% of the pool"
    exhaustive_res = evaluate(
        [attribution_to_ranked(r) for r in synth_run.exhaustive.reports],
        synth_run.corpus.truths, ks=(10,))
    clustered_res = evaluate(
        [attribution_to_ranked(r) for r in clustered.reports],
        synth_run.corpus.truths, ks=(10,))
    delta = abs(exhaustive_res.pct("pairs", 10) - clustered_res.pct("pairs", 10))
    assert delta <= 2.0, f"top-10 rate moved {delta:.2f} points under clustering"
    report(8, f"K=5 search scans {100 * frac:.1f}% of the pool on average; "
              f"top-10 rate shift {delta:.2f} points")


# -- criterion 9: determinism --------------------------------------------------------------


def test_criterion_9_determinism(tmp_path):
    from bugloc.attribution import localize

    corpus = gen_synth(tmp_path / "corpus", programs_per_task=60, seed=9)
    checkpoints = []
    runs = []
    for attempt in (0, 1):
        ds = build_pairs(corpus.manifest, seed=5, exclude_pairs=corpus.eval_pairs,
                         outlier_fraction=0.0)
        cfg = TrainConfig(lr=1e-3, epochs=4, batch_size=16, seed=3)
        params, _ = train(ds.to_training_triples(), ds.schema, len(ds.vocab),
                          ds.n_tests, cfg=cfg, vocab_hash=ds.vocab.hash64(),
                          val_pairs=ds.to_training_triples(ds.val_pairs))
        path = tmp_path / f"ckpt{attempt}.tcnn"
        save_checkpoint(params, path)
        checkpoints.append(path.read_bytes())
        run = run_localization(params, ds, corpus.manifest, corpus.eval_pairs,
                               cfg=IGConfig(steps=25))
        runs.append([(r.program_id, r.test_id, tuple(r.ranked_lines))
                     for r in run.reports])
    assert checkpoints[0] == checkpoints[1], "checkpoint bytes differ between runs"
    assert runs[0] == runs[1], "ranked lines differ between runs"
    assert runs[0], "determinism check produced no localizations"
    report(9, f"identical checkpoints ({len(checkpoints[0])} bytes) and identical "
              f"rankings for {len(runs[0])} localizations across two runs")
