"""Tree convolutional network over encoded programs.

Pipeline per (program, test id) pair: embed each matrix cell into a
24-dimensional vector, extract per-node features with a 1-node
convolution, then run two independent row convolutions (one row with
stride one; three rows with stride three), max-pool each over its rows,
and concatenate into a 256-wide program embedding. The test id embeds
into 5 dimensions, is concatenated on, and three fully connected layers
produce the pass probability (1 = pass).

Filter counts (64/128/128), hidden widths (128/64), relu activations,
and max pooling form the reference configuration; all are overridable
through ModelConfig. The PAD row of the node embedding table is frozen
at zero, so padded cells contribute nothing.
"""

import copy
import struct
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .encoder import EncodingSchema
from .errors import CorruptFile, DegenerateCorpus, SchemaMismatch, ShapeMismatch, VersionMismatch
from .nnkernel import (
    AdamState,
    Tensor,
    adam_step,
    binary_cross_entropy,
    concat,
    dense,
    embedding_lookup,
    global_max_pool,
    relu,
    reshape,
    row_convolution,
)

CHECKPOINT_MAGIC = b"TCNN"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    node_embed_dim: int = 24
    testid_embed_dim: int = 5
    node_filters: int = 64
    row_filters: int = 128
    block_filters: int = 128
    hidden1: int = 128
    hidden2: int = 64


@dataclass
class TrainConfig:
    lr: float = 1e-4
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    validation_fraction: float = 0.05
    stop_at_val_acc: Optional[float] = None  # early stop once reached

    def __post_init__(self):
        if self.lr <= 0 or self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("lr, epochs, and batch_size must be positive")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")


class ModelParams:
    """All trainable tensors plus the schema/vocabulary they are bound to."""

    TENSOR_NAMES = (
        "node_embedding", "testid_embedding",
        "conv_node_w", "conv_node_b",
        "conv_1row_w", "conv_1row_b",
        "conv_3row_w", "conv_3row_b",
        "dense1_w", "dense1_b",
        "dense2_w", "dense2_b",
        "out_w", "out_b",
    )

    def __init__(self, tensors, schema, vocab_size, n_tests, vocab_hash, config):
        for name in self.TENSOR_NAMES:
            setattr(self, name, tensors[name])
        self.schema = schema
        self.vocab_size = vocab_size
        self.n_tests = n_tests
        self.vocab_hash = vocab_hash
        self.config = config

    def named_tensors(self):
        return [(name, getattr(self, name)) for name in self.TENSOR_NAMES]

    @property
    def embedding_width(self):
        return self.config.row_filters + self.config.block_filters

    def arrays(self):
        return {name: t.data for name, t in self.named_tensors()}

    def grads(self):
        out = {}
        for name, t in self.named_tensors():
            out[name] = t.grad if t.grad is not None else np.zeros_like(t.data)
        return out

    def zero_grads(self):
        for _, t in self.named_tensors():
            t.zero_grad()

    def clone(self):
        tensors = {
            name: Tensor(t.data.copy(), requires_grad=t.requires_grad)
            for name, t in self.named_tensors()
        }
        return ModelParams(tensors, self.schema, self.vocab_size, self.n_tests,
                           self.vocab_hash, self.config)


def init_params(vocab_size, n_tests, schema, vocab_hash=0, config=ModelConfig(),
                seed=0, dtype=np.float32, embed_scale=0.25):
    """Seeded initialization: uniform fan-in scaling for weights, zero
    biases, embeddings uniform in [-embed_scale, embed_scale], PAD row
    zeroed. The default scale keeps rare-token features informative from
    the start, which matters at small-corpus training budgets."""
    rng = np.random.default_rng(seed)
    cfg = config
    C = schema.max_nodes

    def emb(rows, cols):
        w = rng.uniform(-embed_scale, embed_scale, size=(rows, cols))
        return w.astype(dtype)

    def fan_in(m, n):
        bound = 1.0 / np.sqrt(n)
        return rng.uniform(-bound, bound, size=(m, n)).astype(dtype)

    node_embedding = emb(vocab_size, cfg.node_embed_dim)
    node_embedding[0] = 0.0  # PAD row, frozen
    tensors = {
        "node_embedding": node_embedding,
        "testid_embedding": emb(n_tests, cfg.testid_embed_dim),
        "conv_node_w": fan_in(cfg.node_filters, cfg.node_embed_dim),
        "conv_node_b": np.zeros(cfg.node_filters, dtype=dtype),
        "conv_1row_w": fan_in(cfg.row_filters, C * cfg.node_filters),
        "conv_1row_b": np.zeros(cfg.row_filters, dtype=dtype),
        "conv_3row_w": fan_in(cfg.block_filters, 3 * C * cfg.node_filters),
        "conv_3row_b": np.zeros(cfg.block_filters, dtype=dtype),
        "dense1_w": fan_in(cfg.hidden1, cfg.row_filters + cfg.block_filters
                           + cfg.testid_embed_dim),
        "dense1_b": np.zeros(cfg.hidden1, dtype=dtype),
        "dense2_w": fan_in(cfg.hidden2, cfg.hidden1),
        "dense2_b": np.zeros(cfg.hidden2, dtype=dtype),
        "out_w": fan_in(1, cfg.hidden2),
        "out_b": np.zeros(1, dtype=dtype),
    }
    wrapped = {name: Tensor(arr, requires_grad=True) for name, arr in tensors.items()}
    return ModelParams(wrapped, schema, vocab_size, n_tests, vocab_hash, config)


def forward_from_embeddings(params, node_emb, test_emb):
    """Forward pass from already-embedded nodes.

    ``node_emb`` is (R, C, de) or (B, R, C, de); ``test_emb`` matches with
    shape (dt,) or (B, dt). Returns (p_pass, program_embedding) tensors.
    Attribution interpolates node embeddings directly through this entry
    point.
    """
    batched = node_emb.ndim == 4
    if batched:
        B, R, C, de = node_emb.shape
        per_node = reshape(node_emb, (B, R * C, 1, de))
    else:
        R, C, de = node_emb.shape
        per_node = reshape(node_emb, (R * C, 1, de))
    node_feat = relu(row_convolution(per_node, 1, 1, params.conv_node_w,
                                     params.conv_node_b))
    F0 = params.config.node_filters
    grid = reshape(node_feat, (B, R, C, F0) if batched else (R, C, F0))
    one = relu(row_convolution(grid, 1, 1, params.conv_1row_w, params.conv_1row_b))
    three = relu(row_convolution(grid, 3, 3, params.conv_3row_w, params.conv_3row_b))
    prog_emb = concat([global_max_pool(one), global_max_pool(three)], axis=-1)
    joined = concat([prog_emb, test_emb], axis=-1)
    h1 = dense(joined, params.dense1_w, params.dense1_b, "relu")
    h2 = dense(h1, params.dense2_w, params.dense2_b, "relu")
    p = dense(h2, params.out_w, params.out_b, "sigmoid")
    p = reshape(p, (p.shape[0],) if batched else ())
    return p, prog_emb


def _check_program(params, program):
    if program.matrix.shape != (params.schema.max_subtrees, params.schema.max_nodes):
        raise ShapeMismatch(
            f"program matrix {program.matrix.shape} does not match schema "
            f"({params.schema.max_subtrees}, {params.schema.max_nodes})"
        )


def node_embeddings(params, program):
    """Constant (R, C, de) embedding grid for one encoded program."""
    _check_program(params, program)
    return params.node_embedding.data[program.matrix]


def forward(params, program, test_index):
    """Single-pair forward. Returns (p_pass float, program_embedding array)."""
    _check_program(params, program)
    if not 0 <= test_index < params.n_tests:
        raise ShapeMismatch(f"test index {test_index} outside [0, {params.n_tests})")
    node_emb = embedding_lookup(params.node_embedding, program.matrix)
    test_emb = embedding_lookup(params.testid_embedding,
                                np.asarray(test_index), freeze_pad=False)
    p, emb = forward_from_embeddings(params, node_emb, test_emb)
    return float(p.data), emb.data.copy()


def forward_batch(params, matrices, test_indices):
    node_emb = embedding_lookup(params.node_embedding, matrices)
    test_emb = embedding_lookup(params.testid_embedding,
                                np.asarray(test_indices), freeze_pad=False)
    p, _ = forward_from_embeddings(params, node_emb, test_emb)
    return p


@dataclass
class Prediction:
    outcome: str  # pass | fail
    p_pass: float


def predict(params, program, test_index):
    """Predicted outcome; p_pass >= 0.5 counts as pass."""
    p, _ = forward(params, program, test_index)
    return Prediction("pass" if p >= 0.5 else "fail", p)


def embed_program(params, program):
    """Program embedding alone; independent of any test id."""
    _, emb = forward(params, program, 0)
    return emb


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    train_acc: float
    val_acc: float


def _accuracy(p, labels):
    predicted = (p >= 0.5).astype(np.float64)
    return float((predicted == labels).mean())


def _eval_accuracy(params, matrices, tids, labels, chunk=512):
    hits = 0
    for start in range(0, len(labels), chunk):
        sl = slice(start, start + chunk)
        p = forward_batch(params, matrices[sl], tids[sl]).data
        hits += int(((p >= 0.5) == (labels[sl] >= 0.5)).sum())
    return hits / max(len(labels), 1)


def train(pairs, schema, vocab_size, n_tests, cfg=None, config=ModelConfig(),
          vocab_hash=0, log_fn=None, val_pairs=None):
    """Train on (EncodedProgram, test_index, label) triples.

    Labels are 1 for pass, 0 for fail. Binary cross-entropy is minimized
    with Adam. Validation pairs may be passed explicitly (``val_pairs``);
    otherwise a seeded fraction of the pairs is held out. The
    best-validation checkpoint is returned together with the per-epoch
    log.
    """
    cfg = cfg or TrainConfig()
    if not pairs:
        raise DegenerateCorpus("no training pairs")
    all_pairs = list(pairs) + list(val_pairs or [])
    labels = np.array([float(lbl) for _, _, lbl in all_pairs])
    if len(set(labels.tolist())) < 2:
        raise DegenerateCorpus("corpus contains a single class")
    matrices = np.stack([enc.matrix for enc, _, _ in all_pairs])
    tids = np.array([tid for _, tid, _ in all_pairs], dtype=np.int64)

    rng = np.random.default_rng(cfg.seed)
    if val_pairs is None:
        order = rng.permutation(len(all_pairs))
        n_val = int(len(all_pairs) * cfg.validation_fraction)
        val_idx, train_idx = order[:n_val], order[n_val:]
    else:
        train_idx = np.arange(len(pairs))
        val_idx = np.arange(len(pairs), len(all_pairs))
        n_val = len(val_idx)
    if len(train_idx) == 0:
        raise DegenerateCorpus("validation split leaves no training pairs")

    params = init_params(vocab_size, n_tests, schema, vocab_hash=vocab_hash,
                         config=config, seed=cfg.seed)
    state = AdamState(lr=cfg.lr)
    log = []
    best = None
    best_acc = -1.0
    for epoch in range(1, cfg.epochs + 1):
        perm = train_idx[rng.permutation(len(train_idx))]
        losses = []
        hits = 0
        for start in range(0, len(perm), cfg.batch_size):
            batch = perm[start:start + cfg.batch_size]
            p = forward_batch(params, matrices[batch], tids[batch])
            loss = binary_cross_entropy(p, labels[batch].astype(p.dtype))
            params.zero_grads()
            loss.backward()
            adam_step(params.arrays(), params.grads(), state)
            losses.append(float(loss.data))
            hits += int(((p.data >= 0.5) == (labels[batch] >= 0.5)).sum())
        val_acc = (_eval_accuracy(params, matrices[val_idx], tids[val_idx],
                                  labels[val_idx]) if n_val else float("nan"))
        entry = EpochLog(epoch, float(np.mean(losses)), hits / len(perm), val_acc)
        log.append(entry)
        if log_fn:
            log_fn(entry)
        score = val_acc if n_val else entry.train_acc
        if score > best_acc:
            best_acc = score
            best = params.clone()
        if cfg.stop_at_val_acc is not None and score >= cfg.stop_at_val_acc:
            break
    return best, log


# -- checkpoint io -------------------------------------------------------------


def save_checkpoint(params, path):
    """Little-endian binary: magic, version, schema, vocab hash, tensors.

    Tensor payloads are stored as raw 32-bit floats; float64 parameters
    are truncated on save.
    """
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<IIII", params.schema.max_subtrees,
                             params.schema.max_nodes, params.vocab_size,
                             params.n_tests))
        fh.write(struct.pack("<Q", params.vocab_hash))
        named = params.named_tensors()
        fh.write(struct.pack("<I", len(named)))
        for name, tensor in named:
            raw = name.encode()
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            arr = tensor.data.astype("<f4")
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def _read_exact(fh, n, what):
    raw = fh.read(n)
    if len(raw) != n:
        raise CorruptFile(f"truncated checkpoint while reading {what}")
    return raw


def load_checkpoint(path, vocabulary=None, expected_schema=None):
    """Load a checkpoint; validates magic, version, and optional bindings.

    When ``vocabulary`` is given, its 64-bit hash must match the stored
    one; when ``expected_schema`` is given, the stored shape must match.
    """
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != CHECKPOINT_MAGIC:
            raise CorruptFile("bad checkpoint magic")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != CHECKPOINT_VERSION:
            raise VersionMismatch(f"checkpoint version {version}, expected {CHECKPOINT_VERSION}")
        max_subtrees, max_nodes, vocab_size, n_tests = struct.unpack(
            "<IIII", _read_exact(fh, 16, "schema"))
        (vocab_hash,) = struct.unpack("<Q", _read_exact(fh, 8, "vocabulary hash"))
        schema = EncodingSchema(max_subtrees=max_subtrees, max_nodes=max_nodes)
        if vocabulary is not None and vocabulary.hash64() != vocab_hash:
            raise SchemaMismatch("vocabulary hash does not match checkpoint")
        if expected_schema is not None and (
                expected_schema.max_subtrees, expected_schema.max_nodes
        ) != (max_subtrees, max_nodes):
            raise SchemaMismatch("encoding schema does not match checkpoint")
        (count,) = struct.unpack("<I", _read_exact(fh, 4, "tensor count"))
        tensors = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2, "tensor name"))
            name = _read_exact(fh, name_len, "tensor name").decode()
            (rank,) = struct.unpack("<I", _read_exact(fh, 4, "tensor rank"))
            shape = struct.unpack(f"<{rank}I", _read_exact(fh, 4 * rank, "tensor dims"))
            n_items = int(np.prod(shape)) if rank else 1
            raw = _read_exact(fh, 4 * n_items, f"tensor {name} data")
            arr = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
            tensors[name] = Tensor(arr, requires_grad=True)
        if fh.read(1):
            raise CorruptFile("trailing bytes after tensor payload")
    missing = set(ModelParams.TENSOR_NAMES) - set(tensors)
    if missing:
        raise CorruptFile(f"checkpoint missing tensors: {sorted(missing)}")
    cfg = ModelConfig(
        node_embed_dim=tensors["node_embedding"].shape[1],
        testid_embed_dim=tensors["testid_embedding"].shape[1],
        node_filters=tensors["conv_node_w"].shape[0],
        row_filters=tensors["conv_1row_w"].shape[0],
        block_filters=tensors["conv_3row_w"].shape[0],
        hidden1=tensors["dense1_w"].shape[0],
        hidden2=tensors["dense2_w"].shape[0],
    )
    return ModelParams(tensors, schema, vocab_size, n_tests, vocab_hash, cfg)
