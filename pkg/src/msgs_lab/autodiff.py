"""Tape-based reverse-mode differentiation over dense float64 matrices.

Every value is a 2-D array. Shapes must match exactly; the only implicit
broadcast is multiplication by a Python scalar. Use :func:`expand_cols` and
:func:`expand_rows` to broadcast explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp


class ShapeError(ValueError):
    pass


@dataclass
class _Node:
    op: str
    inputs: tuple[int, ...]
    backward: Callable[[np.ndarray], tuple] | None


class Tape:
    """Append-only record of operations.

    ``training`` toggles dropout; ``seed`` and ``epoch`` key the dropout
    masks so a replay with the same (seed, epoch) draws the same masks.
    """

    def __init__(self, seed: int = 0, epoch: int = 0, training: bool = False):
        self.seed = seed
        self.epoch = epoch
        self.training = training
        self.nodes: list[_Node] = []
        self.values: list[np.ndarray] = []
        self.params: dict[str, Var] = {}

    def _push(self, op, value, inputs=(), backward=None) -> "Var":
        value = np.asarray(value, dtype=np.float64)
        if value.ndim != 2:
            raise ShapeError(f"{op}: values must be 2-D, got shape {value.shape}")
        for i in inputs:
            if i >= len(self.nodes):
                raise ShapeError(f"{op}: input {i} not on this tape")
        self.nodes.append(_Node(op, tuple(inputs), backward))
        self.values.append(value)
        return Var(self, len(self.nodes) - 1)

    def param(self, name: str, value) -> "Var":
        v = self._push("param", np.array(value, dtype=np.float64))
        self.params[name] = v
        return v

    def constant(self, value) -> "Var":
        value = np.asarray(value, dtype=np.float64)
        if value.ndim == 1:
            value = value[:, None]
        return self._push("const", value)


@dataclass(frozen=True)
class Var:
    tape: Tape = field(repr=False)
    id: int

    @property
    def value(self) -> np.ndarray:
        return self.tape.values[self.id]

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __mul__(self, other):
        if isinstance(other, Var):
            return hadamard(self, other)
        return scalar_mul(self, other)

    __rmul__ = __mul__


def _same_tape(op, *vs):
    t = vs[0].tape
    if any(v.tape is not t for v in vs):
        raise ShapeError(f"{op}: operands live on different tapes")
    return t


def _same_shape(op, a: Var, b: Var):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# -- primitives ---------------------------------------------------------------


def matmul(a: Var, b: Var) -> Var:
    t = _same_tape("matmul", a, b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ {a.shape} @ {b.shape}")
    av, bv = a.value, b.value
    return t._push("matmul", av @ bv, (a.id, b.id), lambda g: (g @ bv.T, av.T @ g))


def add(a: Var, b: Var) -> Var:
    t = _same_tape("add", a, b)
    _same_shape("add", a, b)
    return t._push("add", a.value + b.value, (a.id, b.id), lambda g: (g, g))


def sub(a: Var, b: Var) -> Var:
    t = _same_tape("sub", a, b)
    _same_shape("sub", a, b)
    return t._push("sub", a.value - b.value, (a.id, b.id), lambda g: (g, -g))


def scalar_mul(a: Var, c: float) -> Var:
    c = float(c)
    return a.tape._push("scalar_mul", c * a.value, (a.id,), lambda g: (c * g,))


def hadamard(a: Var, b: Var) -> Var:
    t = _same_tape("hadamard", a, b)
    _same_shape("hadamard", a, b)
    av, bv = a.value, b.value
    return t._push("hadamard", av * bv, (a.id, b.id), lambda g: (g * bv, g * av))


def sparse_matmul(m, a: Var) -> Var:
    """``m @ a`` for a fixed (non-differentiable) sparse or dense matrix ``m``."""
    mat = getattr(m, "matrix", m)
    if mat.shape[1] != a.shape[0]:
        raise ShapeError(f"sparse_matmul: {mat.shape} @ {a.shape}")
    return a.tape._push(
        "sparse_matmul", np.asarray(mat @ a.value), (a.id,), lambda g: (np.asarray(mat.T @ g),)
    )


def row_concat(a: Var, b: Var) -> Var:
    """Concatenate each row of ``a`` with the matching row of ``b``."""
    t = _same_tape("row_concat", a, b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"row_concat: row counts differ {a.shape} vs {b.shape}")
    k = a.shape[1]
    return t._push(
        "row_concat", np.hstack([a.value, b.value]), (a.id, b.id), lambda g: (g[:, :k], g[:, k:])
    )


def relu(a: Var) -> Var:
    mask = a.value > 0
    return a.tape._push("relu", np.where(mask, a.value, 0.0), (a.id,), lambda g: (g * mask,))


def tanh(a: Var) -> Var:
    y = np.tanh(a.value)
    return a.tape._push("tanh", y, (a.id,), lambda g: (g * (1.0 - y * y),))


def sigmoid(a: Var) -> Var:
    x = a.value
    y = np.empty_like(x)
    pos = x >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    y[~pos] = ex / (1.0 + ex)
    return a.tape._push("sigmoid", y, (a.id,), lambda g: (g * y * (1.0 - y),))


def _softmax(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def row_softmax(a: Var) -> Var:
    y = _softmax(a.value)

    def back(g):
        return (y * (g - np.sum(g * y, axis=1, keepdims=True)),)

    return a.tape._push("row_softmax", y, (a.id,), back)


def dropout(a: Var, rate: float, key: int | None = None) -> Var:
    """Inverted dropout; identity unless the tape is in training mode.

    The mask is drawn from a generator keyed by (tape seed, tape epoch, key).
    ``key`` defaults to the id the dropout node receives on the tape, so a
    replayed forward pass reproduces every mask.
    """
    if not 0.0 <= rate < 1.0:
        raise ShapeError(f"dropout: rate must lie in [0, 1), got {rate}")
    t = a.tape
    if not t.training or rate == 0.0:
        return a
    if key is None:
        key = len(t.nodes)
    rng = np.random.default_rng([t.seed, t.epoch, key])
    mask = (rng.random(a.shape) >= rate) / (1.0 - rate)
    return t._push("dropout", a.value * mask, (a.id,), lambda g: (g * mask,))


def sum_all(a: Var) -> Var:
    shape = a.shape
    return a.tape._push("sum", np.array([[a.value.sum()]]), (a.id,), lambda g: (np.full(shape, g[0, 0]),))


def mean_all(a: Var) -> Var:
    shape = a.shape
    n = a.value.size
    return a.tape._push(
        "mean", np.array([[a.value.mean()]]), (a.id,), lambda g: (np.full(shape, g[0, 0] / n),)
    )


def cross_entropy_with_softmax(logits: Var, labels, mask=None) -> Var:
    """Mean negative log-likelihood of ``labels`` over the masked rows."""
    x = logits.value
    labels = np.asarray(labels, dtype=np.int64)
    n, c = x.shape
    if labels.shape != (n,):
        raise ShapeError(f"cross_entropy: {n} rows but {labels.shape} labels")
    rows = np.arange(n) if mask is None else np.flatnonzero(mask)
    if len(rows) == 0:
        raise ShapeError("cross_entropy: empty mask")
    if labels[rows].min() < 0 or labels[rows].max() >= c:
        raise ShapeError("cross_entropy: label outside [0, C)")
    z = x[rows] - x[rows].max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    nll = logsum - z[np.arange(len(rows)), labels[rows]]
    probs = _softmax(x[rows])
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(rows)), labels[rows]] = 1.0

    def back(g):
        grad = np.zeros_like(x)
        grad[rows] = (probs - onehot) * (g[0, 0] / len(rows))
        return (grad,)

    return logits.tape._push("cross_entropy", np.array([[nll.mean()]]), (logits.id,), back)


# -- explicit indexing and broadcasting ----------------------------------------


def _selector(index: np.ndarray, n: int) -> sp.csr_matrix:
    """Sparse ``(len(index), n)`` matrix with a single 1 per row at ``index``."""
    m = len(index)
    return sp.csr_matrix((np.ones(m), index, np.arange(m + 1)), shape=(m, n))


def gather_rows(a: Var, index) -> Var:
    index = np.asarray(index, dtype=np.int64)
    sel = _selector(index, a.shape[0])
    return a.tape._push("gather_rows", a.value[index], (a.id,), lambda g: (np.asarray(sel.T @ g),))


def row_slice(a: Var, start: int, stop: int) -> Var:
    """Rows ``start:stop`` of ``a``."""
    if not 0 <= start < stop <= a.shape[0]:
        raise ShapeError(f"row_slice: [{start}:{stop}] out of range for {a.shape}")
    shape = a.shape

    def back(g):
        out = np.zeros(shape)
        out[start:stop] = g
        return (out,)

    return a.tape._push("row_slice", a.value[start:stop], (a.id,), back)


def scatter_add_rows(a: Var, index, num_rows: int) -> Var:
    """Row ``r`` of the result is the sum of rows ``i`` of ``a`` with ``index[i] == r``."""
    index = np.asarray(index, dtype=np.int64)
    if index.shape != (a.shape[0],):
        raise ShapeError("scatter_add_rows: need one target index per row")
    sel = _selector(index, num_rows)
    return a.tape._push("scatter_add_rows", np.asarray(sel.T @ a.value), (a.id,), lambda g: (g[index],))


def expand_cols(a: Var, cols: int) -> Var:
    """Repeat an ``(n, 1)`` column ``cols`` times."""
    if a.shape[1] != 1:
        raise ShapeError(f"expand_cols: expected a column, got {a.shape}")
    return a.tape._push(
        "expand_cols", np.repeat(a.value, cols, axis=1), (a.id,), lambda g: (g.sum(axis=1, keepdims=True),)
    )


def expand_rows(a: Var, rows: int) -> Var:
    """Repeat a ``(1, m)`` row ``rows`` times."""
    if a.shape[0] != 1:
        raise ShapeError(f"expand_rows: expected a row, got {a.shape}")
    return a.tape._push(
        "expand_rows", np.repeat(a.value, rows, axis=0), (a.id,), lambda g: (g.sum(axis=0, keepdims=True),)
    )


def edge_aggregate(weights: Var, h: Var, src, dst, num_rows: int) -> Var:
    """``out[i] = sum over edges e with src[e] == i of weights[e] * h[dst[e]]``.

    Equivalent to ``scatter_add_rows(expand_cols(weights) * gather_rows(h, dst), src)``
    but runs as one sparse product.
    """
    t = _same_tape("edge_aggregate", weights, h)
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if weights.shape != (len(src), 1) or len(dst) != len(src):
        raise ShapeError(f"edge_aggregate: weights {weights.shape} for {len(src)} edges")
    w = weights.value[:, 0]
    m = sp.csr_matrix((w, (src, dst)), shape=(num_rows, h.shape[0]))
    hv = h.value

    def back(g):
        dw = np.einsum("ij,ij->i", g[src], hv[dst])[:, None]
        return dw, np.asarray(m.T @ g)

    return t._push("edge_aggregate", np.asarray(m @ hv), (weights.id, h.id), back)


# -- reverse pass ---------------------------------------------------------------


def backward(loss: Var) -> dict[int, np.ndarray]:
    """Gradients of a 1x1 ``loss`` for every node that influences it."""
    if loss.shape != (1, 1):
        raise ShapeError(f"backward: loss must be 1x1, got {loss.shape}")
    tape = loss.tape
    grads: dict[int, np.ndarray] = {loss.id: np.ones((1, 1))}
    for nid in range(loss.id, -1, -1):
        g = grads.get(nid)
        node = tape.nodes[nid]
        if g is None or node.backward is None:
            continue
        for inp, gi in zip(node.inputs, node.backward(g)):
            if inp in grads:
                grads[inp] = grads[inp] + gi
            else:
                grads[inp] = gi
    return grads


def param_grads(loss: Var) -> dict[str, np.ndarray]:
    """Gradient for every named parameter on the loss's tape (zeros if unused)."""
    grads = backward(loss)
    tape = loss.tape
    return {
        name: grads.get(v.id, np.zeros_like(v.value)) for name, v in tape.params.items()
    }


# -- finite differences ---------------------------------------------------------


@dataclass
class GradCheckReport:
    max_rel_error: float
    offending: tuple[str, tuple[int, int]] | None
    checked: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tol


def finite_difference_check(
    loss_fn: Callable[[Tape], Var],
    params: dict[str, np.ndarray],
    h: float = 1e-6,
    tol: float = 1e-4,
    max_entries: int = 200,
    seed: int = 0,
    floor: float = 1e-4,
) -> GradCheckReport:
    """Compare reverse-mode gradients with central differences.

    ``loss_fn`` receives a fresh tape whose ``params`` dict is already
    populated from ``params`` and returns the scalar loss. At most
    ``max_entries`` randomly chosen entries per tensor are probed. The error
    per entry is ``|analytic - numeric| / max(|analytic|, |numeric|, floor)``.
    """

    def run(values):
        tape = Tape()
        for name, val in values.items():
            tape.param(name, val)
        return loss_fn(tape)

    analytic = param_grads(run(params))
    rng = np.random.default_rng(seed)
    worst, where, checked = 0.0, None, 0
    for name, base in params.items():
        flat = np.arange(base.size)
        if base.size > max_entries:
            flat = rng.choice(base.size, size=max_entries, replace=False)
        for f in flat:
            idx = np.unravel_index(f, base.shape)
            probe = {k: v.copy() for k, v in params.items()}
            probe[name][idx] = base[idx] + h
            up = run(probe).value[0, 0]
            probe[name][idx] = base[idx] - h
            down = run(probe).value[0, 0]
            numeric = (up - down) / (2 * h)
            a = analytic[name][idx]
            err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            checked += 1
            if err > worst or where is None:
                worst, where = err, (name, tuple(int(i) for i in idx))
    return GradCheckReport(worst, where, checked, tol)
