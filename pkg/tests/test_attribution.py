import numpy as np
import pytest

from bugloc.attribution import (
    AttributionReport,
    ClusterIndex,
    IGConfig,
    PoolProgram,
    build_cluster_index,
    cosine_distance,
    integrated_gradients,
    integrated_gradients_over,
    line_suspiciousness,
    localize,
    rank_lines,
    select_baseline,
)
from bugloc.errors import EmptyPool, NotAFailure, PoolTooSmall
from bugloc.nnkernel import Tensor
from bugloc.tcnn import TrainConfig, predict, forward, train
from tests.test_tcnn import SCHEMA, TINY, encode_rows, tiny_params, toy_corpus


# -- integrated gradients core -------------------------------------------------


def test_linear_probe_exact():
    # for F(e) = <w, e> the credits are exactly w_i (e_i - b_i) at any m
    rng = np.random.default_rng(0)
    shape = (4, 3, 5)
    w = rng.normal(size=shape)
    e = rng.normal(size=shape)
    b = rng.normal(size=shape)

    def linear(batch):
        from bugloc.nnkernel import reshape, dense

        m = batch.shape[0]
        flat = reshape(batch, (m, w.size))
        return dense(flat, Tensor(w.reshape(1, -1)), Tensor(np.zeros(1)), "none")

    expected = w * (e - b)
    for steps in (1, 10, 100):
        ig = integrated_gradients_over(linear, e, b, steps)
        assert np.max(np.abs(ig - expected)) < 1e-9


def test_baseline_equal_to_input_gives_zero():
    rng = np.random.default_rng(1)
    e = rng.normal(size=(3, 2, 4))

    def square(batch):
        from bugloc.nnkernel import reshape, dense

        m = batch.shape[0]
        flat = reshape(batch, (m, e.size))
        return dense(flat, Tensor(rng.normal(size=(1, e.size))), Tensor(np.zeros(1)),
                     "sigmoid")

    ig = integrated_gradients_over(square, e, e.copy(), 10)
    assert np.all(ig == 0)


def trained_toy_model():
    pairs = toy_corpus(n_per_class=40, seed=3)
    cfg = TrainConfig(lr=0.003, epochs=12, batch_size=8, seed=1,
                      validation_fraction=0.1)
    params, _ = train(pairs, SCHEMA, vocab_size=10, n_tests=3, cfg=cfg, config=TINY)
    return params


@pytest.fixture(scope="module")
def toy_model():
    return trained_toy_model()


def toy_failing_pair():
    # marker token 9 makes the model predict fail; baseline drops it
    buggy = encode_rows([[2, 4, 9], [3, 5, 9]])
    baseline = encode_rows([[2, 4, 5], [3, 5]])
    return buggy, baseline


def test_ig_requires_predicted_failure(toy_model):
    buggy, baseline = toy_failing_pair()
    with pytest.raises(NotAFailure):
        integrated_gradients(toy_model, baseline, baseline, 0)


def test_completeness_on_trained_model(toy_model):
    buggy, baseline = toy_failing_pair()
    assert predict(toy_model, buggy, 0).outcome == "fail"
    result = integrated_gradients(toy_model, buggy, baseline, 0, IGConfig(steps=100))
    delta = result.f_input - result.f_baseline
    assert result.completeness_residual <= 0.02 * abs(delta) + 1e-4


def test_identical_programs_zero_credits(toy_model):
    buggy, _ = toy_failing_pair()
    result = integrated_gradients(toy_model, buggy, buggy, 0, IGConfig(steps=5))
    assert np.all(result.cell_credits == 0)
    assert result.completeness_residual < 1e-12


def test_riemann_refinement(toy_model):
    buggy, baseline = toy_failing_pair()
    residuals = {}
    for steps in (25, 200):
        r = integrated_gradients(toy_model, buggy, baseline, 0, IGConfig(steps=steps))
        residuals[steps] = r.completeness_residual
    assert residuals[200] <= residuals[25] + 1e-12


def test_pad_cells_carry_zero_credit(toy_model):
    buggy, baseline = toy_failing_pair()
    result = integrated_gradients(toy_model, buggy, baseline, 0, IGConfig(steps=10))
    pad = (buggy.matrix == 0) & (baseline.matrix == 0)
    assert np.all(result.cell_credits[pad] == 0)


def test_ig_matches_slow_loop(toy_model):
    # batched path evaluation equals a plain per-step loop
    buggy, baseline = toy_failing_pair()
    steps = 7
    result = integrated_gradients(toy_model, buggy, baseline, 0, IGConfig(steps=steps))
    from bugloc.tcnn import forward_from_embeddings, node_embeddings

    e = node_embeddings(toy_model, buggy)
    b = node_embeddings(toy_model, baseline)
    test_vec = toy_model.testid_embedding.data[0]
    grads = np.zeros_like(e)
    for k in range(1, steps + 1):
        point = Tensor(b + (k / steps) * (e - b), requires_grad=True)
        p, _ = forward_from_embeddings(toy_model, point, Tensor(test_vec))
        p.backward()
        grads += -point.grad
    expected = ((e - b) * grads / steps).sum(axis=-1)
    pad = (buggy.matrix == 0) & (baseline.matrix == 0)
    expected[pad] = 0
    assert np.allclose(result.cell_credits, expected, atol=1e-10)


# -- line aggregation ----------------------------------------------------------


def one_line_encoding():
    enc = encode_rows([[2, 3, 4], [5, 6]])
    enc.cell_line[:2] = np.where(enc.matrix[:2] > 0, 1, 0)
    return enc


def test_all_nodes_on_one_line():
    enc = one_line_encoding()
    credits = np.zeros_like(enc.cell_line, dtype=np.float64)
    credits[0, :3] = [0.3, 0.6, 0.9]
    credits[1, :2] = [0.1, 0.6]
    scores = line_suspiciousness(credits, enc)
    assert set(scores) == {1}
    assert np.isclose(scores[1], np.mean([0.3, 0.6, 0.9, 0.1, 0.6]))


def test_two_line_scores():
    enc = encode_rows([[2], [3, 4]])
    # row 1 on line 1 (one cell), row 2 on line 2 (two cells)
    credits = np.zeros_like(enc.cell_line, dtype=np.float64)
    credits[0, 0] = 1.0
    scores = line_suspiciousness(credits, enc)
    assert scores == {1: 1.0, 2: 0.0}


def test_line_scores_order_free():
    enc = encode_rows([[2, 3], [4, 5]])
    rng = np.random.default_rng(5)
    credits = rng.normal(size=enc.cell_line.shape)
    base = line_suspiciousness(credits, enc)
    # swapping two cells of the same line leaves every score unchanged
    credits2 = credits.copy()
    credits2[0, 0], credits2[0, 1] = credits[0, 1], credits[0, 0]
    assert line_suspiciousness(credits2, enc) == base


def test_rank_lines_ordering_and_ties():
    assert rank_lines({3: 0.9, 1: 0.9, 2: 0.1}) == [1, 3, 2]
    assert rank_lines({1: 0.5, 2: 0.5, 3: 0.5}) == [1, 2, 3]


def test_rank_invariant_to_positive_scaling():
    rng = np.random.default_rng(6)
    scores = {i: float(rng.normal()) for i in range(1, 12)}
    base = rank_lines(scores)
    assert rank_lines({k: 7.3 * v for k, v in scores.items()}) == base


def test_rank_absolute_mode():
    assert rank_lines({1: -2.0, 2: 1.0}, absolute=True) == [1, 2]
    assert rank_lines({1: -2.0, 2: 1.0}) == [2, 1]


# -- baseline selection ---------------------------------------------------------


def make_pool(vectors):
    return [
        PoolProgram(program_id=f"p{i:02d}", embedding=np.asarray(v, dtype=float),
                    encoded=None)
        for i, v in enumerate(vectors)
    ]


def test_exact_match_is_chosen():
    pool = make_pool([[1, 0], [0, 1], [0.6, 0.8]])
    choice = select_baseline(np.array([0.6, 0.8]), pool)
    assert choice.program_id == "p02"
    assert choice.distance < 1e-12
    assert choice.scanned == 3


def test_selection_matches_bruteforce():
    rng = np.random.default_rng(7)
    pool = make_pool(rng.normal(size=(20, 6)))
    for _ in range(25):
        q = rng.normal(size=6)
        expected = min(pool, key=lambda p: (cosine_distance(q, p.embedding),
                                            p.program_id))
        assert select_baseline(q, pool).program_id == expected.program_id


def test_selection_tie_by_program_id():
    pool = make_pool([[1.0, 0.0], [2.0, 0.0]])  # same direction, same distance
    assert select_baseline(np.array([3.0, 0.0]), pool).program_id == "p00"


def test_empty_pool():
    with pytest.raises(EmptyPool):
        select_baseline(np.zeros(3), [])


def test_clustered_distance_never_beats_global():
    rng = np.random.default_rng(8)
    pool = make_pool(rng.normal(size=(30, 4)))
    index = build_cluster_index(pool, k=5, seed=0)
    for _ in range(20):
        q = rng.normal(size=4)
        global_choice = select_baseline(q, pool)
        clustered = select_baseline(q, pool, index=index)
        assert clustered.distance >= global_choice.distance - 1e-12
        assert clustered.scanned <= global_choice.scanned
        cluster_of_best = index.assignments[global_choice.program_id]
        q_cluster = int(np.argmin(np.linalg.norm(index.centroids - q, axis=1)))
        if cluster_of_best == q_cluster:
            assert clustered.program_id == global_choice.program_id


# -- k-means --------------------------------------------------------------------


def test_kmeans_identical_points_degenerate():
    pool = make_pool([[1.0, 2.0]] * 8)
    index = build_cluster_index(pool, k=3, seed=1)
    sizes = sorted(len(m) for m in index.members)
    assert sizes == [0, 0, 8]
    assert np.all(np.isfinite(index.centroids))


def test_kmeans_two_separated_blobs():
    rng = np.random.default_rng(9)
    a = rng.normal(loc=0.0, scale=0.1, size=(20, 3))
    b = rng.normal(loc=10.0, scale=0.1, size=(20, 3))
    pool = make_pool(np.vstack([a, b]))
    index = build_cluster_index(pool, k=2, seed=4)
    # oracle: nearest true center decides blob membership
    for i, prog in enumerate(pool):
        true_blob = 0 if i < 20 else 1
        same = [p for p in pool
                if index.assignments[p.program_id] == index.assignments[prog.program_id]]
        blob_ids = {int(s.program_id[1:]) < 20 for s in same}
        assert blob_ids == {i < 20}, f"cluster mixes blobs near {prog.program_id}"
        assert true_blob == (0 if int(prog.program_id[1:]) < 20 else 1)


def test_kmeans_deterministic():
    rng = np.random.default_rng(10)
    pool = make_pool(rng.normal(size=(25, 4)))
    a = build_cluster_index(pool, k=5, seed=3)
    b = build_cluster_index(pool, k=5, seed=3)
    assert np.array_equal(a.centroids, b.centroids)
    assert a.members == b.members


def test_kmeans_pool_too_small():
    with pytest.raises(PoolTooSmall):
        build_cluster_index(make_pool([[1, 2], [3, 4]]), k=5)


def test_balanced_clusters_scan_fraction():
    # five tight blobs, K=5: scans about one fifth of the pool
    rng = np.random.default_rng(11)
    blobs = [rng.normal(loc=c, scale=0.05, size=(12, 3)) for c in
             ([0, 0, 0], [8, 0, 0], [0, 8, 0], [0, 0, 8], [8, 8, 8])]
    pool = make_pool(np.vstack(blobs))
    index = build_cluster_index(pool, k=5, seed=2)
    scanned = [select_baseline(p.embedding, pool, index=index).scanned for p in pool]
    assert np.mean(scanned) / len(pool) <= 0.25


# -- localize -------------------------------------------------------------------


def test_localize_end_to_end(toy_model):
    buggy, baseline_enc = toy_failing_pair()
    benign = encode_rows([[2, 6, 5], [3, 4]])
    pool = [
        PoolProgram("c1", forward(toy_model, baseline_enc, 0)[1], baseline_enc),
        PoolProgram("c2", forward(toy_model, benign, 0)[1], benign),
    ]
    report = localize(toy_model, "b1", "t0", buggy, 0, pool, IGConfig(steps=50))
    assert report.baseline_id == "c1"  # nearer: differs only in the marker
    assert report.ranked_lines
    assert set(report.line_scores) == {1, 2}
    assert report.f_input > 0.5
    # the marker token sits on both lines; scores should be positive
    assert report.line_scores[report.ranked_lines[0]] > 0


def test_localize_not_a_failure(toy_model):
    _, baseline_enc = toy_failing_pair()
    pool = [PoolProgram("c1", forward(toy_model, baseline_enc, 0)[1], baseline_enc)]
    with pytest.raises(NotAFailure):
        localize(toy_model, "ok", "t0", baseline_enc, 0, pool)


def test_localize_source_propagates_parser_errors():
    from bugloc.attribution import localize_source
    from bugloc.cparser import SourceProgram
    from bugloc.encoder import Vocabulary
    from bugloc.errors import ParseError

    params = tiny_params()
    src = SourceProgram("t", "p", "a", "int x = ;", "buggy")
    with pytest.raises(ParseError):
        localize_source(params, Vocabulary([]), src, "t0", 0, [])
