"""Dense 2-D tensors with reverse-mode differentiation.

Everything is float64. A Tensor records its producing operation through
parent links and a backward closure; ``backward`` walks the tape once in
reverse topological order and accumulates gradients into ``requires_grad``
leaves. Reductions follow ascending index order everywhere, so forward
values are bit-deterministic given fixed inputs and seeds.

Segment operations take an int64 segment-id vector aligned with rows and
reduce rows into ``n_segments`` buckets; ``segment_softmax`` normalizes
within each segment (the attention kernel). ``edge_matvec`` applies a
per-row square matrix (flattened row-major) to a per-row vector, which is
what edge-conditioned message functions need.
"""

from __future__ import annotations

import numpy as np

from .rng import Rng, derive


class AutodiffError(ValueError):
    pass


def _as_matrix(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise AutodiffError(f"tensors are 2-D, got shape {arr.shape}")
    return arr


class Tensor:
    __slots__ = ("value", "requires_grad", "grad", "_parents", "_backward_fn", "_done")

    def __init__(self, values, requires_grad: bool = False):
        self.value = _as_matrix(values)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn = None
        self._done = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # operator sugar; scalars are folded into scale/shift nodes
    def __add__(self, other):
        if isinstance(other, Tensor):
            return add(self, other)
        return scale_shift(self, 1.0, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Tensor):
            return add(self, scale_shift(other, -1.0, 0.0))
        return scale_shift(self, 1.0, -float(other))

    def __rsub__(self, other):
        return scale_shift(self, -1.0, float(other))

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale_shift(self, float(other), 0.0)

    __rmul__ = __mul__

    def __neg__(self):
        return scale_shift(self, -1.0, 0.0)

    def __matmul__(self, other):
        return matmul(self, other)


def tensor(values, requires_grad: bool = False) -> Tensor:
    return Tensor(values, requires_grad=requires_grad)


def constant(values) -> Tensor:
    return Tensor(values, requires_grad=False)


def _node(value, parents, backward_fn) -> Tensor:
    out = Tensor(value)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward_fn = backward_fn
    return out


def backward(loss: Tensor) -> None:
    """Populate ``grad`` on every requires_grad leaf reachable from ``loss``.

    Raises if ``loss`` is not 1x1 or if called twice on the same tensor.
    Gradients on leaves accumulate across calls on distinct graphs; use
    :func:`zero_grad` between optimization steps.
    """
    if loss.shape != (1, 1):
        raise AutodiffError(f"backward requires a scalar (1x1) tensor, got {loss.shape}")
    if loss._done:
        raise AutodiffError("backward already ran on this tensor; rebuild the graph first")
    loss._done = True
    if not loss.requires_grad:
        return

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones((1, 1))}
    for node in reversed(topo):
        grad = grads.pop(id(node), None)
        if grad is None:
            continue
        if node._backward_fn is None:
            if node.grad is None:
                node.grad = np.zeros_like(node.value)
            node.grad += grad
            continue
        parent_grads = node._backward_fn(grad)
        for parent, pgrad in zip(node._parents, parent_grads):
            if pgrad is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pgrad
            else:
                grads[key] = pgrad


def zero_grad(params) -> None:
    values = params.values() if isinstance(params, dict) else params
    for p in values:
        p.grad = None


# elementwise and linear algebra ops

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise AutodiffError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    av, bv = a.value, b.value

    def back(g):
        return g @ bv.T, av.T @ g

    return _node(av @ bv, (a, b), back)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape and not (b.shape == (1, a.shape[1])):
        raise AutodiffError(f"add shape mismatch: {a.shape} + {b.shape}")
    row_bias = b.shape != a.shape

    def back(g):
        return g, (g.sum(axis=0, keepdims=True) if row_bias else g)

    return _node(a.value + b.value, (a, b), back)


def _reduce_to(grad: np.ndarray, shape) -> np.ndarray:
    out = grad
    if shape[0] == 1 and grad.shape[0] > 1:
        out = out.sum(axis=0, keepdims=True)
    if shape[1] == 1 and grad.shape[1] > 1:
        out = out.sum(axis=1, keepdims=True)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; one side may be a broadcastable row or column."""
    if a.shape != b.shape:
        compat = (
            (a.shape[0] == b.shape[0] and 1 in (a.shape[1], b.shape[1]))
            or (a.shape[1] == b.shape[1] and 1 in (a.shape[0], b.shape[0]))
        )
        if not compat:
            raise AutodiffError(f"mul shape mismatch: {a.shape} * {b.shape}")
    av, bv = a.value, b.value

    def back(g):
        return _reduce_to(g * bv, a.shape), _reduce_to(g * av, b.shape)

    return _node(av * bv, (a, b), back)


def scale_shift(x: Tensor, a: float, b: float) -> Tensor:
    def back(g):
        return (g * a,)

    return _node(a * x.value + b, (x,), back)


def relu(x: Tensor) -> Tensor:
    mask = x.value > 0

    def back(g):
        return (g * mask,)

    return _node(np.where(mask, x.value, 0.0), (x,), back)


def leaky_relu(x: Tensor, alpha: float = 0.2) -> Tensor:
    mask = x.value > 0

    def back(g):
        return (g * np.where(mask, 1.0, alpha),)

    return _node(np.where(mask, x.value, alpha * x.value), (x,), back)


def sigmoid(x: Tensor) -> Tensor:
    v = x.value
    out = np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))), np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))

    def back(g):
        return (g * out * (1.0 - out),)

    return _node(out, (x,), back)


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.value)

    def back(g):
        return (g * (1.0 - out * out),)

    return _node(out, (x,), back)


def concat_cols(tensors) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise AutodiffError("concat_cols needs at least one tensor")
    rows = tensors[0].shape[0]
    for t in tensors:
        if t.shape[0] != rows:
            raise AutodiffError("concat_cols row counts differ")
    widths = [t.shape[1] for t in tensors]
    splits = np.cumsum(widths)[:-1]

    def back(g):
        return tuple(np.hsplit(g, splits))

    return _node(np.concatenate([t.value for t in tensors], axis=1), tuple(tensors), back)


def gather_rows(x: Tensor, index) -> Tensor:
    idx = np.asarray(index, dtype=np.int64).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[0]):
        raise AutodiffError("gather_rows index out of range")
    shape = x.shape

    def back(g):
        out = np.zeros(shape)
        np.add.at(out, idx, g)
        return (out,)

    return _node(x.value[idx], (x,), back)


# segment reductions

def _check_segments(x: Tensor, segment_ids, n_segments: int) -> np.ndarray:
    seg = np.asarray(segment_ids, dtype=np.int64).reshape(-1)
    if seg.shape[0] != x.shape[0]:
        raise AutodiffError(
            f"segment ids ({seg.shape[0]}) do not match rows ({x.shape[0]})"
        )
    if n_segments < 0 or (seg.size and (seg.min() < 0 or seg.max() >= n_segments)):
        raise AutodiffError("segment id out of range")
    return seg


def segment_sum(x: Tensor, segment_ids, n_segments: int) -> Tensor:
    seg = _check_segments(x, segment_ids, n_segments)
    out = np.zeros((n_segments, x.shape[1]))
    np.add.at(out, seg, x.value)

    def back(g):
        return (g[seg],)

    return _node(out, (x,), back)


def segment_mean(x: Tensor, segment_ids, n_segments: int) -> Tensor:
    seg = _check_segments(x, segment_ids, n_segments)
    counts = np.bincount(seg, minlength=n_segments).astype(np.float64)
    safe = np.maximum(counts, 1.0)[:, None]
    out = np.zeros((n_segments, x.shape[1]))
    np.add.at(out, seg, x.value)
    out /= safe

    def back(g):
        return ((g / safe)[seg],)

    return _node(out, (x,), back)


def segment_max(x: Tensor, segment_ids, n_segments: int) -> Tensor:
    """Per-segment column max; empty segments yield zeros.

    The gradient flows to the first maximal row in each segment (ascending
    index), which keeps backward deterministic under ties.
    """
    seg = _check_segments(x, segment_ids, n_segments)
    d = x.shape[1]
    out = np.zeros((n_segments, d))
    argmax = np.full((n_segments, d), -1, dtype=np.int64)
    order = np.argsort(seg, kind="stable")
    boundaries = np.searchsorted(seg[order], np.arange(n_segments + 1))
    for s in range(n_segments):
        rows = order[boundaries[s] : boundaries[s + 1]]
        if rows.size == 0:
            continue
        block = x.value[rows]
        best = block.argmax(axis=0)
        out[s] = block[best, np.arange(d)]
        argmax[s] = rows[best]

    def back(g):
        gx = np.zeros_like(x.value)
        for s in range(n_segments):
            if argmax[s, 0] < 0:
                continue
            gx[argmax[s], np.arange(d)] += g[s]
        return (gx,)

    return _node(out, (x,), back)


def segment_softmax(x: Tensor, segment_ids, n_segments: int) -> Tensor:
    """Softmax over rows within each segment, per column."""
    seg = _check_segments(x, segment_ids, n_segments)
    maxes = np.full((n_segments, x.shape[1]), -np.inf)
    np.maximum.at(maxes, seg, x.value)
    shifted = x.value - maxes[seg]
    exp = np.exp(shifted)
    sums = np.zeros((n_segments, x.shape[1]))
    np.add.at(sums, seg, exp)
    out = exp / sums[seg]

    def back(g):
        weighted = np.zeros((n_segments, x.shape[1]))
        np.add.at(weighted, seg, g * out)
        return (out * (g - weighted[seg]),)

    return _node(out, (x,), back)


def edge_matvec(m: Tensor, h: Tensor) -> Tensor:
    """Row-wise matrix-vector product: m rows are d*d row-major matrices."""
    rows, d = h.shape
    if m.shape != (rows, d * d):
        raise AutodiffError(
            f"edge_matvec expects matrices ({rows}, {d * d}), got {m.shape}"
        )
    m3 = m.value.reshape(rows, d, d)
    hv = h.value

    def back(g):
        gm = np.einsum("ep,ek->epk", g, hv).reshape(rows, d * d)
        gh = np.einsum("epk,ep->ek", m3, g)
        return gm, gh

    return _node(np.einsum("epk,ek->ep", m3, hv), (m, h), back)


def dropout(x: Tensor, p: float, key: int) -> Tensor:
    """Inverted dropout with a counter-based mask.

    The mask is a pure function of ``key``, so a (seed, layer, epoch, batch)
    derivation fully determines it.
    """
    if p < 0.0 or p >= 1.0:
        raise AutodiffError(f"dropout probability must be in [0, 1), got {p}")
    if p == 0.0:
        return scale_shift(x, 1.0, 0.0)
    rng = Rng(derive(key, 0xD80))
    keep = 1.0 - p
    flat = np.array([rng.uniform() for _ in range(x.value.size)])
    mask = (flat.reshape(x.shape) < keep) / keep

    def back(g):
        return (g * mask,)

    return _node(x.value * mask, (x,), back)


# losses (targets and masks are plain arrays, not differentiated)

def _loss_mask(shape, targets, mask):
    t = np.asarray(targets, dtype=np.float64)
    if t.shape != shape:
        raise AutodiffError(f"targets shape {t.shape} != predictions shape {shape}")
    if mask is None:
        m = np.ones(shape)
    else:
        m = np.asarray(mask, dtype=np.float64)
        if m.shape != shape:
            raise AutodiffError(f"mask shape {m.shape} != predictions shape {shape}")
    total = m.sum()
    if total <= 0:
        raise AutodiffError("loss mask has no valid entries")
    return t, m, total


def bce_with_logits(logits: Tensor, targets, mask=None) -> Tensor:
    """Masked mean binary cross-entropy on logits (numerically stable)."""
    t, m, total = _loss_mask(logits.shape, targets, mask)
    x = logits.value
    per = np.maximum(x, 0.0) - x * t + np.log1p(np.exp(-np.abs(x)))
    value = (per * m).sum() / total
    sig = 1.0 / (1.0 + np.exp(-x))

    def back(g):
        return (g[0, 0] * (sig - t) * m / total,)

    return _node([[value]], (logits,), back)


def mse(pred: Tensor, targets, mask=None) -> Tensor:
    """Masked mean squared error."""
    t, m, total = _loss_mask(pred.shape, targets, mask)
    diff = pred.value - t
    value = (diff * diff * m).sum() / total

    def back(g):
        return (g[0, 0] * 2.0 * diff * m / total,)

    return _node([[value]], (pred,), back)


def sum_all(x: Tensor) -> Tensor:
    shape = x.shape

    def back(g):
        return (np.full(shape, g[0, 0]),)

    return _node([[x.value.sum()]], (x,), back)


def gru_cell(
    x: Tensor,
    h: Tensor,
    w_z: Tensor, u_z: Tensor, b_z: Tensor,
    w_r: Tensor, u_r: Tensor, b_r: Tensor,
    w_c: Tensor, u_c: Tensor, b_c: Tensor,
) -> Tensor:
    """Standard GRU update built from recorded primitives.

    z = sigmoid(x Wz + h Uz + bz), r = sigmoid(x Wr + h Ur + br),
    c = tanh(x Wc + (r*h) Uc + bc), h' = (1-z)*h + z*c.
    """
    z = sigmoid(add(add(matmul(x, w_z), matmul(h, u_z)), b_z))
    r = sigmoid(add(add(matmul(x, w_r), matmul(h, u_r)), b_r))
    c = tanh(add(add(matmul(x, w_c), matmul(mul(r, h), u_c)), b_c))
    return add(mul(1.0 - z, h), mul(z, c))


def grad_check(f, xs, eps: float = 1e-5) -> float:
    """Max relative error between backward gradients and central differences.

    ``f`` takes the tensors in ``xs`` and returns a scalar Tensor; it must be
    deterministic (two identical evaluations are compared bytewise, so
    dropout is rejected).
    """
    if isinstance(xs, Tensor):
        xs = [xs]
    xs = list(xs)
    for x in xs:
        x.requires_grad = True

    first = f(*xs)
    second = f(*xs)
    if not np.array_equal(first.value, second.value):
        raise AutodiffError("grad_check requires a deterministic function")
    if first.shape != (1, 1):
        raise AutodiffError("grad_check function must return a scalar tensor")

    zero_grad(xs)
    out = f(*xs)
    backward(out)

    worst = 0.0
    for x in xs:
        grad = x.grad if x.grad is not None else np.zeros_like(x.value)
        it = np.nditer(x.value, flags=["multi_index"])
        while not it.finished:
            ij = it.multi_index
            orig = x.value[ij]
            x.value[ij] = orig + eps
            fp = f(*xs).value[0, 0]
            x.value[ij] = orig - eps
            fm = f(*xs).value[0, 0]
            x.value[ij] = orig
            fd = (fp - fm) / (2.0 * eps)
            a = grad[ij]
            rel = abs(a - fd) / max(abs(a), abs(fd), 1e-8)
            worst = max(worst, rel)
            it.iternext()
    return worst
