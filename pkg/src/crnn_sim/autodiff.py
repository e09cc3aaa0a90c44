"""Minimal reverse-mode automatic differentiation over numpy arrays.

The op set is exactly what the recurrent cells and the seq2seq harness
need: elementwise arithmetic, (broadcasted, batched) matmul, batched
matrix inverse, block direct sums, slicing/concat/reshape, tanh/sigmoid,
embedding gather, a fused softmax cross entropy, and a Givens rotation
chain for the orthogonal cell.  Gradients flow through matrix inversion
via d(A^{-1}) = -A^{-1} dA A^{-1}.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=float)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self._parents: Tuple["Tensor", ...] = ()
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"

    # -- autograd machinery ---------------------------------------------------

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a gradient requires a scalar")
            grad = np.ones_like(self.data)
        topo: List[Tensor] = []
        seen = set()

        def visit(t):
            if id(t) in seen:
                return
            seen.add(id(t))
            for p in t._parents:
                visit(p)
            topo.append(t)

        visit(self)
        grads = {id(self): np.asarray(grad, dtype=float)}
        for t in reversed(topo):
            g = grads.pop(id(t), None)
            if g is None:
                continue
            if t.requires_grad:
                t.grad = g if t.grad is None else t.grad + g
            if t._backward is None:
                continue
            for parent, pg in zip(t._parents, t._backward(g)):
                if pg is None:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    def zero_grad(self):
        self.grad = None

    # -- operator sugar --------------------------------------------------------

    def __add__(self, other):
        return add(self, _as_tensor(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, scale(_as_tensor(other), -1.0))

    def __rsub__(self, other):
        return add(_as_tensor(other), scale(self, -1.0))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data, parents, backward) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad or p._parents for p in parents):
        out._parents = tuple(parents)
        out._backward = backward
        out.requires_grad = False
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# -- primitive ops ------------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    return _node(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)),
    )


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    return _node(
        a.data * b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        ),
    )


def scale(a: Tensor, s: float) -> Tensor:
    return _node(a.data * s, (a,), lambda g: (g * s,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.data.shape), _unbroadcast(gb, b.data.shape)

    return _node(a.data @ b.data, (a, b), backward)


def transpose(a: Tensor) -> Tensor:
    return _node(
        np.swapaxes(a.data, -1, -2), (a,), lambda g: (np.swapaxes(g, -1, -2),)
    )


def reshape(a: Tensor, shape) -> Tensor:
    old = a.data.shape
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def getitem(a: Tensor, idx) -> Tensor:
    def backward(g):
        out = np.zeros_like(a.data)
        np.add.at(out, idx, g)
        return (out,)

    return _node(a.data[idx], (a,), backward)


def concat(tensors: Sequence[Tensor], axis=-1) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return _node(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def tsum(a: Tensor, axis=None, keepdims=False) -> Tensor:
    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, a.data.shape).copy(),)

    return _node(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward)


def mean(a: Tensor, axis=None, keepdims=False) -> Tensor:
    count = a.data.size if axis is None else a.data.shape[axis]
    return scale(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _node(out, (a,), lambda g: (g * (1.0 - out**2),))


def sigmoid(a: Tensor) -> Tensor:
    out = 1.0 / (1.0 + np.exp(-a.data))
    return _node(out, (a,), lambda g: (g * out * (1.0 - out),))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _node(out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    return _node(np.log(a.data), (a,), lambda g: (g / a.data,))


def inv(a: Tensor) -> Tensor:
    """Batched matrix inverse; gradient -A^{-T} G A^{-T}."""
    out = np.linalg.inv(a.data)

    def backward(g):
        oT = np.swapaxes(out, -1, -2)
        return (-oT @ g @ oT,)

    return _node(out, (a,), backward)


def block_diag(a: Tensor, b: Tensor) -> Tensor:
    """Direct sum on the last two axes: (..., n, n) + (..., m, m) ->
    (..., n+m, n+m); batch dims must match."""
    a, b = _as_tensor(a), _as_tensor(b)
    na, nb = a.data.shape[-1], b.data.shape[-1]
    batch = np.broadcast_shapes(a.data.shape[:-2], b.data.shape[:-2])
    out = np.zeros(batch + (na + nb, na + nb))
    out[..., :na, :na] = a.data
    out[..., na:, na:] = b.data

    def backward(g):
        return (
            _unbroadcast(g[..., :na, :na], a.data.shape),
            _unbroadcast(g[..., na:, na:], b.data.shape),
        )

    return _node(out, (a, b), backward)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    ids = np.asarray(ids)

    def backward(g):
        out = np.zeros_like(table.data)
        np.add.at(out, ids, g)
        return (out,)

    return _node(table.data[ids], (table,), backward)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: Tensor, targets: np.ndarray, mask: np.ndarray = None):
    """Mean -log softmax(logits)[target] over unmasked positions.

    logits: (..., V); targets: integer (...); mask: float (...) or None.
    Returns (loss_tensor, probs_array).
    """
    targets = np.asarray(targets)
    probs = softmax(logits.data)
    flat_probs = probs.reshape(-1, probs.shape[-1])
    flat_t = targets.reshape(-1)
    picked = flat_probs[np.arange(flat_t.size), flat_t].reshape(targets.shape)
    if mask is None:
        mask = np.ones(targets.shape)
    total = float(mask.sum())
    if total <= 0:
        raise ValueError("cross entropy needs at least one unmasked position")
    nll = -(np.log(np.maximum(picked, 1e-300)) * mask).sum() / total

    def backward(g):
        onehot = np.zeros_like(flat_probs)
        onehot[np.arange(flat_t.size), flat_t] = 1.0
        grad = (flat_probs - onehot).reshape(probs.shape)
        grad = grad * (mask[..., None] / total) * g
        return (grad,)

    return _node(np.array(nll), (logits,), backward), probs


def rotation_chain(h: Tensor, thetas: Tensor, pairs: Sequence[Tuple[int, int]]) -> Tensor:
    """Apply the Givens product G_K ... G_1 to the rows of h (B, n), where
    G_k rotates coordinate pair pairs[k] by thetas[k]."""
    th = np.atleast_1d(thetas.data)
    assert len(pairs) == th.shape[0]
    cur = h.data.copy()
    saved = np.empty((len(pairs),) + cur.shape[:-1] + (2,))
    cos, sin = np.cos(th), np.sin(th)
    for k, (i, j) in enumerate(pairs):
        hi, hj = cur[..., i].copy(), cur[..., j].copy()
        saved[k, ..., 0] = hi
        saved[k, ..., 1] = hj
        cur[..., i] = cos[k] * hi - sin[k] * hj
        cur[..., j] = sin[k] * hi + cos[k] * hj

    def backward(g):
        gh = g.copy()
        gth = np.zeros_like(th)
        for k in range(len(pairs) - 1, -1, -1):
            i, j = pairs[k]
            hi, hj = saved[k, ..., 0], saved[k, ..., 1]
            gi, gj = gh[..., i].copy(), gh[..., j].copy()
            # d(out_i)/dθ = -s hi - c hj ; d(out_j)/dθ = c hi - s hj
            gth[k] = np.sum(gi * (-sin[k] * hi - cos[k] * hj) + gj * (cos[k] * hi - sin[k] * hj))
            gh[..., i] = cos[k] * gi + sin[k] * gj
            gh[..., j] = -sin[k] * gi + cos[k] * gj
        return gh, gth.reshape(thetas.data.shape)

    return _node(cur, (h, thetas), backward)


# -- parameter helpers ---------------------------------------------------------


def parameter(data, name=None) -> Tensor:
    return Tensor(np.asarray(data, dtype=float), requires_grad=True, name=name)


def glorot_uniform(shape, rng: np.random.Generator) -> np.ndarray:
    fan_in = shape[-1] if len(shape) > 1 else shape[0]
    fan_out = shape[0]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def numeric_gradient(f, params: List[Tensor], eps: float = 1e-5):
    """Central finite differences of the scalar f() wrt each parameter."""
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            fp = float(f().data)
            flat[i] = old - eps
            fm = float(f().data)
            flat[i] = old
            gflat[i] = (fp - fm) / (2 * eps)
        grads.append(g)
    return grads


def check_gradients(f, params: List[Tensor], eps=1e-5, rtol=1e-4) -> float:
    """Max relative error between analytic and numeric gradients."""
    for p in params:
        p.zero_grad()
    loss = f()
    loss.backward()
    numeric = numeric_gradient(f, params, eps)
    worst = 0.0
    for p, ng in zip(params, numeric):
        ag = p.grad if p.grad is not None else np.zeros_like(p.data)
        denom = max(1e-8, float(np.max(np.abs(ng))), float(np.max(np.abs(ag))))
        worst = max(worst, float(np.max(np.abs(ag - ng))) / denom)
    return worst
