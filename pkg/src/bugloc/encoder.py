"""Fixed-shape 2-D matrix encoding of syntax trees.

A tree is flattened breadth-first into depth-1 subtree rows: each node
with at least one child contributes one row holding the node itself
followed by its direct children, left to right. Rows are padded to a
corpus-wide ``max_nodes`` width and programs are padded to a corpus-wide
``max_subtrees`` row count, giving every program the same matrix shape.
Contiguous row blocks then correspond to larger subtrees, which is what
the row convolutions downstream exploit.
"""

import hashlib
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ShapeOverflow

PAD_TOKEN = "<pad>"
OOV_TOKEN = "<oov>"
PAD_INDEX = 0
OOV_INDEX = 1


class Vocabulary:
    """Bijective token/index map with reserved PAD (0) and OOV (1) slots.

    Deterministic for a given corpus: real tokens are sorted
    lexicographically before index assignment.
    """

    def __init__(self, tokens):
        self.tokens = [PAD_TOKEN, OOV_TOKEN] + sorted(set(tokens))
        self.index = {tok: i for i, tok in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def lookup(self, token):
        return self.index.get(token, OOV_INDEX)

    def token_at(self, index):
        return self.tokens[index]

    def hash64(self):
        """64-bit content hash (first 8 bytes of SHA-256, little-endian)."""
        digest = hashlib.sha256("\n".join(self.tokens).encode()).digest()
        return int.from_bytes(digest[:8], "little")

    def save(self, path):
        """One token per line; line number minus one is the index."""
        with open(path, "w") as fh:
            fh.write("\n".join(self.tokens) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            lines = fh.read().splitlines()
        if lines[:2] != [PAD_TOKEN, OOV_TOKEN]:
            raise ValueError("vocabulary file missing PAD/OOV header lines")
        vocab = cls.__new__(cls)
        vocab.tokens = lines
        vocab.index = {tok: i for i, tok in enumerate(lines)}
        return vocab


@dataclass(frozen=True)
class EncodingSchema:
    max_subtrees: int
    max_nodes: int
    pad_index: int = PAD_INDEX


@dataclass
class EncodedProgram:
    matrix: np.ndarray  # (max_subtrees, max_nodes) int32 vocabulary indices
    cell_line: np.ndarray  # same shape; source line per cell, 0 for PAD
    subtree_count: int


def flatten_bfs(root):
    """Flatten a tree into depth-1 subtree rows in BFS head order.

    Leaves never head a row; they appear only as children in their
    parent's row.
    """
    rows = []
    queue = deque([root])
    while queue:
        node = queue.popleft()
        if node.children:
            rows.append([node] + node.children)
            queue.extend(node.children)
    return rows


def subtree_count(root):
    return sum(1 for node in root.walk() if node.children)


def build_vocabulary(corpus):
    """Shared vocabulary over the canonical tokens of every corpus tree."""
    if not corpus:
        raise ValueError("empty corpus")
    tokens = set()
    for root in corpus:
        for node in root.walk():
            tokens.add(node.token)
    return Vocabulary(tokens)


def _round_up_to_multiple(value, base):
    return -(-value // base) * base


def corpus_schema(corpus, outlier_fraction=0.0):
    """Schema (row and column maxima) over a corpus after outlier removal.

    Drops the top ``outlier_fraction`` of programs by subtree count, then
    takes maxima over the survivors. ``max_subtrees`` is rounded up to a
    multiple of 3 so the 3-row stride-3 convolution tiles exactly.
    """
    if not corpus:
        raise ValueError("empty corpus")
    if not 0.0 <= outlier_fraction < 0.5:
        raise ValueError("outlier_fraction must be in [0, 0.5)")
    counts = [subtree_count(root) for root in corpus]
    n_drop = int(len(corpus) * outlier_fraction)
    order = sorted(range(len(corpus)), key=lambda i: counts[i])
    survivors = order[: len(corpus) - n_drop] if n_drop else order
    max_rows = 1
    max_width = 2
    for i in survivors:
        max_rows = max(max_rows, counts[i])
        for row in flatten_bfs(corpus[i]):
            max_width = max(max_width, len(row))
    return EncodingSchema(
        max_subtrees=_round_up_to_multiple(max(max_rows, 3), 3),
        max_nodes=max_width,
    )


def fits_schema(root, schema):
    rows = flatten_bfs(root)
    if len(rows) > schema.max_subtrees:
        return False
    return all(len(row) <= schema.max_nodes for row in rows)


def encode_program(root, vocab, schema):
    """Encode one tree as an index matrix plus a same-shape line map.

    Unknown tokens map to OOV. Raises ShapeOverflow when the tree exceeds
    the schema; callers are expected to have filtered outliers.
    """
    rows = flatten_bfs(root)
    if len(rows) > schema.max_subtrees:
        raise ShapeOverflow(
            f"{len(rows)} subtree rows exceed schema max {schema.max_subtrees}"
        )
    matrix = np.zeros((schema.max_subtrees, schema.max_nodes), dtype=np.int32)
    cell_line = np.zeros_like(matrix)
    for r, row in enumerate(rows):
        if len(row) > schema.max_nodes:
            raise ShapeOverflow(
                f"row {r} width {len(row)} exceeds schema max {schema.max_nodes}"
            )
        for c, node in enumerate(row):
            matrix[r, c] = vocab.lookup(node.token)
            cell_line[r, c] = node.line
    return EncodedProgram(matrix=matrix, cell_line=cell_line, subtree_count=len(rows))


def decode_rows(encoded, vocab):
    """Recover the token rows of the real (non-PAD) part of the matrix."""
    rows = []
    for r in range(encoded.subtree_count):
        row = []
        for idx in encoded.matrix[r]:
            if idx == PAD_INDEX:
                break
            row.append(vocab.token_at(int(idx)))
        rows.append(row)
    return rows
