"""Prediction attribution for bug localization.

For a pair the model correctly predicts as failing, credit for the
failure probability F = 1 - p_pass is distributed over the program's
matrix cells with integrated gradients: gradients of F are averaged
along the straight-line path (in node-embedding space) from a baseline
program's embeddings to the buggy program's embeddings, then scaled by
the embedding difference. The baseline is the correct program whose
embedding is nearest by cosine distance; since it carries no bug signal
its failure probability is near zero, so the credits effectively
distribute F over the cells that differ.

Per-cell credits summed over embedding dimensions satisfy the
completeness identity (their total approximates F(input) - F(baseline));
per-cell means give node credits, which average per source line into
suspiciousness scores. Both endpoints share the test, so the test-id
embedding is held fixed along the path.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyPool, NotAFailure, PoolTooSmall
from .nnkernel import Tensor, tensor_sum
from .tcnn import forward, forward_from_embeddings, node_embeddings

__all__ = [
    "IGConfig", "IGResult", "AttributionReport", "ClusterIndex", "PoolProgram",
    "BaselineChoice", "cosine_distance", "select_baseline", "build_cluster_index",
    "integrated_gradients_over", "integrated_gradients", "line_suspiciousness",
    "rank_lines", "localize", "localize_source",
]


@dataclass(frozen=True)
class IGConfig:
    steps: int = 100
    completeness_tolerance: float = 0.02  # relative; see completeness_residual

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")


@dataclass
class IGResult:
    cell_credits: np.ndarray  # per-cell sum over embedding dims
    node_credits: np.ndarray  # per-cell mean over embedding dims
    f_input: float
    f_baseline: float

    @property
    def completeness_residual(self):
        return abs(float(self.cell_credits.sum()) - (self.f_input - self.f_baseline))


@dataclass
class AttributionReport:
    program_id: str
    test_id: str
    baseline_id: str
    cell_credits: np.ndarray
    node_credits: np.ndarray
    line_scores: dict
    ranked_lines: list
    f_input: float
    f_baseline: float
    steps: int
    scanned: int = 0  # baseline candidates examined

    @property
    def completeness_residual(self):
        return abs(float(self.cell_credits.sum()) - (self.f_input - self.f_baseline))


@dataclass
class PoolProgram:
    program_id: str
    embedding: np.ndarray
    encoded: object  # EncodedProgram


@dataclass
class BaselineChoice:
    program_id: str
    distance: float
    scanned: int


@dataclass
class ClusterIndex:
    centroids: np.ndarray  # (K, embedding_width)
    members: list  # list of program-id lists, one per centroid
    assignments: dict  # program_id -> cluster number


def cosine_distance(a, b):
    """1 - cosine similarity; zero-norm vectors are maximally distant."""
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 1.0
    return float(1.0 - np.dot(a, b) / (na * nb))


def select_baseline(query_embedding, pool, index=None):
    """Nearest correct program by cosine distance; ties by program id.

    With a ClusterIndex the scan is restricted to the members of the
    query's nearest non-empty cluster. Returns a BaselineChoice with the
    number of candidates scanned.
    """
    if not pool:
        raise EmptyPool("no correct programs to choose a baseline from")
    candidates = pool
    if index is not None:
        by_id = {p.program_id: p for p in pool}
        dists = np.linalg.norm(index.centroids - query_embedding, axis=1)
        best_cluster = -1
        best_dist = np.inf
        for c in np.argsort(dists):
            ids = [pid for pid in index.members[c] if pid in by_id]
            if ids:
                best_cluster, best_dist = int(c), float(dists[c])
                break
        if best_cluster >= 0:
            candidates = [by_id[pid] for pid in index.members[best_cluster]
                          if pid in by_id]
    best = min(
        candidates,
        key=lambda p: (cosine_distance(query_embedding, p.embedding), p.program_id),
    )
    return BaselineChoice(
        program_id=best.program_id,
        distance=cosine_distance(query_embedding, best.embedding),
        scanned=len(candidates),
    )


def _kmeans_plusplus(points, k, rng):
    n = len(points)
    centroids = np.empty((k, points.shape[1]), dtype=points.dtype)
    centroids[0] = points[rng.integers(n)]
    d2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[i] = points[rng.integers(n)]
            continue
        probs = d2 / total
        centroids[i] = points[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((points - centroids[i]) ** 2, axis=1))
    return centroids


def build_cluster_index(pool, k=5, seed=0, max_iter=100):
    """Lloyd's iterations from k-means++ seeding, deterministic under seed.

    Runs until the assignment reaches a fixpoint or ``max_iter``
    iterations. Clusters that lose all members keep their previous
    centroid and simply own an empty member list.
    """
    if len(pool) < k:
        raise PoolTooSmall(f"pool of {len(pool)} programs < {k} clusters")
    rng = np.random.default_rng(seed)
    points = np.stack([p.embedding for p in pool]).astype(np.float64)
    centroids = _kmeans_plusplus(points, k, rng)
    assignment = None
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assignment = np.argmin(d2, axis=1)
        if assignment is not None and np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for c in range(k):
            mask = assignment == c
            if np.any(mask):
                centroids[c] = points[mask].mean(axis=0)
    members = [[] for _ in range(k)]
    assignments = {}
    for prog, c in zip(pool, assignment):
        members[int(c)].append(prog.program_id)
        assignments[prog.program_id] = int(c)
    return ClusterIndex(centroids=centroids, members=members, assignments=assignments)


def integrated_gradients_over(target_fn, input_emb, baseline_emb, steps):
    """Riemann approximation of integrated gradients for ``target_fn``.

    ``target_fn`` maps a batch of embedding grids (Tensor, shape
    (m,) + grid) to a batch of scalar outputs. Gradients are taken at the
    points baseline + (k/m)(input - baseline) for k = 1..m; per-element
    credit is (input - baseline) times the gradient mean.
    """
    diff = input_emb - baseline_emb
    alphas = np.arange(1, steps + 1, dtype=input_emb.dtype) / steps
    shape = (steps,) + (1,) * input_emb.ndim
    batch = Tensor(
        baseline_emb[None] + alphas.reshape(shape) * diff[None], requires_grad=True
    )
    out = target_fn(batch)
    tensor_sum(out).backward()
    mean_grad = batch.grad.mean(axis=0)
    return diff * mean_grad


def integrated_gradients(params, program, baseline, test_index, cfg=IGConfig()):
    """Cell credits for a failing (program, test) pair against a baseline.

    Raises NotAFailure when the model predicts pass: attribution is only
    queried on correct failure predictions. Cells that are PAD in both
    programs carry exactly zero credit; cells real in only one side keep
    their credit (it is part of the completeness total) but PAD cells of
    the input never reach line scores because they map to no line.
    """
    p_input, _ = forward(params, program, test_index)
    if p_input >= 0.5:
        raise NotAFailure(
            f"model predicts pass (p={p_input:.4f}); attribution needs a failure"
        )
    p_base, _ = forward(params, baseline, test_index)
    e_input = node_embeddings(params, program)
    e_base = node_embeddings(params, baseline)
    test_vec = params.testid_embedding.data[test_index]

    def pass_prob(emb_batch):
        m = emb_batch.shape[0]
        test_batch = Tensor(np.broadcast_to(test_vec, (m, test_vec.shape[0])))
        p, _ = forward_from_embeddings(params, emb_batch, test_batch)
        return p

    # target is F = 1 - p_pass, so credits are the negated credits of p
    ig = -integrated_gradients_over(pass_prob, e_input, e_base, cfg.steps)
    cell_credits = ig.sum(axis=-1)
    joint_pad = (program.matrix == 0) & (baseline.matrix == 0)
    cell_credits[joint_pad] = 0.0
    return IGResult(
        cell_credits=cell_credits,
        node_credits=cell_credits / ig.shape[-1],
        f_input=1.0 - p_input,
        f_baseline=1.0 - p_base,
    )


def line_suspiciousness(node_credits, encoded):
    """Mean node credit per source line, over the real cells of that line."""
    scores = {}
    counts = {}
    lines = encoded.cell_line
    for r in range(encoded.subtree_count):
        for c in range(lines.shape[1]):
            line = int(lines[r, c])
            if line <= 0:
                continue
            scores[line] = scores.get(line, 0.0) + float(node_credits[r, c])
            counts[line] = counts.get(line, 0) + 1
    return {line: scores[line] / counts[line] for line in scores}


def rank_lines(line_scores, absolute=False):
    """Lines by descending score, ties by ascending line number."""
    key = (lambda kv: (-abs(kv[1]), kv[0])) if absolute else (lambda kv: (-kv[1], kv[0]))
    return [line for line, _ in sorted(line_scores.items(), key=key)]


def localize_source(params, vocab, source, test_id, test_index, pool,
                    cfg=IGConfig(), index=None, absolute=False):
    """Parse, encode, and attribute one failing source program.

    Parser and encoder errors propagate; a pass prediction raises
    NotAFailure.
    """
    from .cparser import normalize_identifiers, parse_program
    from .encoder import encode_program

    tree = normalize_identifiers(parse_program(source))
    encoded = encode_program(tree, vocab, params.schema)
    program_id = source.program_id if hasattr(source, "program_id") else "<input>"
    return localize(params, program_id, test_id, encoded, test_index, pool,
                    cfg=cfg, index=index, absolute=absolute)


def localize(params, program_id, test_id, encoded, test_index, pool,
             cfg=IGConfig(), index=None, absolute=False):
    """Full attribution for one failing pair: baseline, credits, ranking."""
    _, query_emb = forward(params, encoded, test_index)
    choice = select_baseline(query_emb, pool, index=index)
    baseline = next(p for p in pool if p.program_id == choice.program_id)
    result = integrated_gradients(params, encoded, baseline.encoded, test_index, cfg)
    line_scores = line_suspiciousness(result.node_credits, encoded)
    return AttributionReport(
        program_id=program_id,
        test_id=test_id,
        baseline_id=choice.program_id,
        cell_credits=result.cell_credits,
        node_credits=result.node_credits,
        line_scores=line_scores,
        ranked_lines=rank_lines(line_scores, absolute=absolute),
        f_input=result.f_input,
        f_baseline=result.f_baseline,
        steps=cfg.steps,
        scanned=choice.scanned,
    )
