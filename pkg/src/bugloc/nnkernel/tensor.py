"""Minimal dense-tensor engine with reverse-mode gradients.

The network architecture is fixed and small, so instead of a framework
this module provides exactly the forward operations it needs, each with
an exact hand-written backward. Values are numpy arrays (float64 in
tests, float32 for training speed). Gradients with respect to input
embeddings are first class, which the attribution path depends on.

Every operation accepts an optional leading batch axis: the documented
shapes are for a single example, and inputs with one extra leading
dimension are processed batched.
"""

import numpy as np

from ..errors import IndexOutOfRange, ShapeMismatch


class Tensor:
    """An array plus the recorded graph edge that produced it.

    ``backward()`` on a scalar output visits the recorded graph in
    reverse topological order exactly once, accumulating ``.grad`` on
    every tensor that requires it.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def zero_grad(self):
        self.grad = None

    def _accum(self, grad):
        if self.grad is None:
            # copy: callers may pass views (reshape/concat backward)
            self.grad = np.array(grad, dtype=self.data.dtype)
        else:
            self.grad += grad

    def backward(self):
        if self.data.size != 1:
            raise ShapeMismatch("backward() requires a scalar output")
        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, grad={self.requires_grad})"


def _result(data, parents, backward):
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def embedding_lookup(table, indices, freeze_pad=True):
    """Gather rows of ``table`` (V, d) at an integer index grid.

    Output shape is ``indices.shape + (d,)``. The gradient scatters
    additively into table rows; with ``freeze_pad`` the PAD row (index 0)
    receives no updates, keeping it at the zero vector.
    """
    idx = np.asarray(indices)
    if not np.issubdtype(idx.dtype, np.integer):
        raise ShapeMismatch("indices must be integers")
    if table.ndim != 2:
        raise ShapeMismatch("embedding table must be rank 2")
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise IndexOutOfRange(
            f"index range [{idx.min()}, {idx.max()}] outside table of {table.shape[0]} rows"
        )
    data = table.data[idx]

    def backward(grad):
        if table.requires_grad:
            g = np.zeros_like(table.data)
            np.add.at(g, idx.ravel(), grad.reshape(-1, table.shape[1]))
            if freeze_pad:
                g[0] = 0
            table._accum(g)

    return _result(data, [table], backward)


def row_convolution(inp, kernel_rows, stride_rows, filters, bias):
    """Convolve over the row axis with full-width windows.

    ``inp`` is (R, C, d) or (B, R, C, d); each filter spans
    ``kernel_rows`` whole rows. Output is (R', F) with
    R' = (R - kernel_rows) / stride_rows + 1; the stride must divide
    R - kernel_rows exactly.
    """
    if inp.ndim not in (3, 4):
        raise ShapeMismatch(f"conv input must be rank 3 or 4, got {inp.ndim}")
    r_axis = inp.ndim - 3
    R, C, d = inp.shape[r_axis:]
    if R < kernel_rows:
        raise ShapeMismatch(f"{R} rows < kernel of {kernel_rows}")
    if (R - kernel_rows) % stride_rows != 0:
        raise ShapeMismatch(
            f"stride {stride_rows} does not divide {R} - {kernel_rows} rows"
        )
    window = kernel_rows * C * d
    n_filters = filters.shape[0]
    if filters.ndim != 2 or filters.shape[1] != window:
        raise ShapeMismatch(
            f"filters {filters.shape} incompatible with window length {window}"
        )
    if bias.shape != (n_filters,):
        raise ShapeMismatch(f"bias {bias.shape} != ({n_filters},)")
    n_windows = (R - kernel_rows) // stride_rows + 1
    starts = np.arange(n_windows) * stride_rows
    row_idx = starts[:, None] + np.arange(kernel_rows)[None, :]
    if inp.ndim == 3:
        gathered = inp.data[row_idx]  # (R', k, C, d)
        flat = gathered.reshape(n_windows, window)
    else:
        gathered = inp.data[:, row_idx]  # (B, R', k, C, d)
        flat = gathered.reshape(inp.shape[0], n_windows, window)
    data = flat @ filters.data.T + bias.data

    def backward(grad):
        dflat = None
        if inp.requires_grad or filters.requires_grad:
            dflat = grad @ filters.data  # (..., R', window)
        if filters.requires_grad:
            filters._accum(
                np.einsum("...rf,...rn->fn", grad, flat, optimize=True)
            )
        if bias.requires_grad:
            bias._accum(grad.reshape(-1, n_filters).sum(axis=0))
        if inp.requires_grad:
            dwin = dflat.reshape(grad.shape[:-1] + (kernel_rows, C, d))
            dinp = np.zeros_like(inp.data)
            if stride_rows == kernel_rows:
                # non-overlapping windows tile the rows exactly
                dinp += dwin.reshape(inp.shape)
            else:
                moved = np.moveaxis(dinp, r_axis, 0)
                src = np.moveaxis(dwin, r_axis, 0)  # (R', ..., k, C, d)
                for j in range(kernel_rows):
                    np.add.at(moved, starts + j, src[:, ..., j, :, :])
            inp._accum(dinp)

    return _result(data, [inp, filters, bias], backward)


def dense(inp, weights, bias, activation="none"):
    """Affine map plus pointwise activation: (n,) -> (m,) or batched."""
    m, n = weights.shape
    if inp.shape[-1] != n:
        raise ShapeMismatch(f"dense input {inp.shape} incompatible with weights {weights.shape}")
    if bias.shape != (m,):
        raise ShapeMismatch(f"bias {bias.shape} != ({m},)")
    z = inp.data @ weights.data.T + bias.data
    if activation == "none":
        data, local = z, None
    elif activation == "relu":
        data = np.maximum(z, 0)
        local = (z > 0).astype(z.dtype)
    elif activation == "sigmoid":
        data = 1.0 / (1.0 + np.exp(-z))
        local = data * (1.0 - data)
    else:
        raise ValueError(f"unknown activation {activation!r}")

    def backward(grad):
        dz = grad if local is None else grad * local
        if weights.requires_grad:
            weights._accum(np.einsum("...m,...n->mn", dz, inp.data, optimize=True))
        if bias.requires_grad:
            bias._accum(dz.reshape(-1, m).sum(axis=0))
        if inp.requires_grad:
            inp._accum(dz @ weights.data)

    return _result(data, [inp, weights, bias], backward)


def relu(inp):
    mask = inp.data > 0

    def backward(grad):
        if inp.requires_grad:
            inp._accum(grad * mask)

    return _result(np.maximum(inp.data, 0), [inp], backward)


def global_max_pool(inp):
    """Per-filter max over rows: (R, F) -> (F,) or (B, R, F) -> (B, F).

    Gradient routes to the first argmax row of each column.
    """
    if inp.ndim < 2:
        raise ShapeMismatch("max pool input must have a row axis")
    am = np.argmax(inp.data, axis=-2)
    data = np.take_along_axis(inp.data, am[..., None, :], axis=-2).squeeze(-2)

    def backward(grad):
        if inp.requires_grad:
            dinp = np.zeros_like(inp.data)
            np.put_along_axis(dinp, am[..., None, :], grad[..., None, :], axis=-2)
            inp._accum(dinp)

    return _result(data, [inp], backward)


def concat(tensors, axis=-1):
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(grad):
        for t, start, end in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                indexer = [slice(None)] * grad.ndim
                indexer[axis] = slice(start, end)
                t._accum(grad[tuple(indexer)])

    return _result(data, list(tensors), backward)


def reshape(inp, shape):
    old = inp.shape

    def backward(grad):
        if inp.requires_grad:
            inp._accum(grad.reshape(old))

    return _result(inp.data.reshape(shape), [inp], backward)


def tensor_sum(inp):
    """Sum of all elements, as a scalar tensor."""

    def backward(grad):
        if inp.requires_grad:
            inp._accum(np.broadcast_to(grad, inp.shape).copy())

    return _result(inp.data.sum(), [inp], backward)


def binary_cross_entropy(probs, labels, eps=1e-7):
    """Mean BCE of predicted pass probabilities against 0/1 labels.

    Probabilities are clipped to [eps, 1-eps]; the gradient is exact for
    the clipped expression (zero where the clip is active).
    """
    y = np.asarray(labels, dtype=probs.dtype)
    if y.shape != probs.shape:
        raise ShapeMismatch(f"labels {y.shape} != probs {probs.shape}")
    p = np.clip(probs.data, eps, 1.0 - eps)
    inside = (probs.data > eps) & (probs.data < 1.0 - eps)
    n = max(p.size, 1)
    data = -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).sum() / n

    def backward(grad):
        if probs.requires_grad:
            dp = (p - y) / (p * (1.0 - p)) / n
            probs._accum(grad * dp * inside)

    return _result(np.asarray(data), [probs], backward)
