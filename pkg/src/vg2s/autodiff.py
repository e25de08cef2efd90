"""Minimal dense-tensor numeric core with reverse-mode differentiation.

Covers exactly the operation set the networks here need: dense linear
algebra, the usual activations, masked softmax, 1-D (transposed)
convolution, pooling and linear resize.  Everything is 64-bit; the goal is
verifiable gradients at desk scale, not throughput.

Usage: create `Parameter` leaves, open a `Tape`, build a scalar loss from
taped ops, then `backward(loss)`.  Gradients accumulate on parameter
`.grad` buffers until `zero_grad` is called.
"""

from __future__ import annotations

import numpy as np

_ACTIVE_TAPE: list["Tape"] = []


class ShapeError(ValueError):
    pass


class Tape:
    """Ordered record of taped tensors; backward walks it once, in reverse."""

    def __init__(self):
        self.nodes: list[Tensor] = []

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPE.append(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE_TAPE.pop()
        return False


def active_tape() -> Tape | None:
    return _ACTIVE_TAPE[-1] if _ACTIVE_TAPE else None


class Tensor:
    __slots__ = ("data", "grad", "parents", "vjp", "tape", "is_param")

    def __init__(self, data, parents=(), vjp=None, is_param=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.parents: tuple[Tensor, ...] = parents
        self.vjp = vjp
        self.is_param = is_param
        self.tape: Tape | None = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, param={self.is_param})"

    # arithmetic sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


class Parameter(Tensor):
    def __init__(self, data):
        super().__init__(data, is_param=True)
        self.grad = np.zeros_like(self.data)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(out: Tensor) -> Tensor:
    tape = active_tape()
    if tape is not None and any(p.is_param or p.tape is tape for p in out.parents):
        out.tape = tape
        tape.nodes.append(out)
    return out


def backward(loss: Tensor) -> None:
    """Populate gradients of every parameter reachable from `loss`.

    Repeated calls accumulate into parameter .grad buffers; intermediate
    gradients are local to each call.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    tape = loss.tape
    if tape is None:
        raise ValueError("loss is not on a tape (detached from all parameters)")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}

    def accumulate(t: Tensor, g: np.ndarray):
        if t.is_param:
            t.grad += g
        elif t.tape is tape:
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + g
            else:
                grads[key] = g

    for node in reversed(tape.nodes):
        g = grads.get(id(node))
        if g is None or node.vjp is None:
            continue
        for parent, pg in zip(node.parents, node.vjp(g)):
            if pg is not None:
                accumulate(parent, pg)


def zero_grad(params) -> None:
    for p in params:
        p.grad[...] = 0.0


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    if g.shape == tuple(shape):
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------- arithmetic

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))
    return _record(out)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))
    return _record(out)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape),
                            _unbroadcast(g * a.data, b.shape)))
    return _record(out)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data / b.data, (a, b),
                 lambda g: (_unbroadcast(g / b.data, a.shape),
                            _unbroadcast(-g * a.data / (b.data ** 2), b.shape)))
    return _record(out)


def square(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data ** 2, (a,), lambda g: (2.0 * a.data * g,))
    return _record(out)


def exp(a) -> Tensor:
    a = as_tensor(a)
    y = np.exp(a.data)
    out = Tensor(y, (a,), lambda g: (g * y,))
    return _record(out)


def log(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.log(a.data), (a,), lambda g: (g / a.data,))
    return _record(out)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim < 1 or b.data.ndim < 2:
        raise ShapeError(f"matmul: unsupported shapes {a.shape} x {b.shape}")
    if a.data.ndim == 1:
        y = a.data @ b.data
        out = Tensor(y, (a, b),
                     lambda g: (g @ b.data.T, np.outer(a.data, g)))
        return _record(out)
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeError(f"matmul: inner dims differ, {a.shape} x {b.shape}")
    y = a.data @ b.data
    out = Tensor(y, (a, b),
                 lambda g: (_unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape),
                            _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape)))
    return _record(out)


# ---------------------------------------------------------------- reductions

def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    y = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _record(Tensor(y, (a,), vjp))


def tmean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    y = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.data.size if axis is None else a.data.shape[axis]

    def vjp(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape) / count,)

    return _record(Tensor(y, (a,), vjp))


def tmax(a, axis, keepdims=False) -> Tensor:
    """Max-pool along an axis; gradient flows to the first argmax."""
    a = as_tensor(a)
    y = a.data.max(axis=axis, keepdims=True)
    mask = a.data == y
    first = mask & (np.cumsum(mask, axis=axis) == 1)
    out_data = y if keepdims else np.squeeze(y, axis=axis)

    def vjp(g):
        g = np.asarray(g)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.where(first, np.broadcast_to(g, a.shape), 0.0),)

    return _record(Tensor(out_data, (a,), vjp))


# ------------------------------------------------------------- restructuring

def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))
    return _record(out)


def transpose(a, axes=None) -> Tensor:
    a = as_tensor(a)
    inv = None if axes is None else tuple(np.argsort(axes))
    out = Tensor(a.data.transpose(axes), (a,), lambda g: (g.transpose(inv),))
    return _record(out)


def concat(parts, axis=0) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    out = Tensor(np.concatenate([p.data for p in parts], axis=axis), tuple(parts), vjp)
    return _record(out)


def split(a, sizes, axis=0) -> list[Tensor]:
    a = as_tensor(a)
    if sum(sizes) != a.data.shape[axis]:
        raise ShapeError(f"split: sizes {sizes} do not cover axis {axis} of {a.shape}")
    offsets = np.cumsum([0] + list(sizes))
    outs = []
    for idx in range(len(sizes)):
        lo, hi = offsets[idx], offsets[idx + 1]
        sl = [slice(None)] * a.data.ndim
        sl[axis] = slice(lo, hi)
        sl = tuple(sl)

        def vjp(g, sl=sl):
            full = np.zeros(a.shape)
            full[sl] = g
            return (full,)

        outs.append(_record(Tensor(a.data[sl], (a,), vjp)))
    return outs


def take(a, indices, axis=0) -> Tensor:
    """Gather rows/entries along an axis; backward scatter-adds."""
    a = as_tensor(a)
    indices = np.asarray(indices, dtype=np.int64)

    def vjp(g):
        full = np.zeros(a.shape)
        np.add.at(full, (slice(None),) * axis + (indices,), g)
        return (full,)

    return _record(Tensor(np.take(a.data, indices, axis=axis), (a,), vjp))


# -------------------------------------------------------------- activations

def leaky_relu(a, slope=0.2) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    out = Tensor(np.where(mask, a.data, slope * a.data), (a,),
                 lambda g: (np.where(mask, g, slope * g),))
    return _record(out)


def elu(a, alpha=1.0) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    neg = alpha * (np.exp(np.minimum(a.data, 0.0)) - 1.0)
    out = Tensor(np.where(mask, a.data, neg), (a,),
                 lambda g: (np.where(mask, g, g * (neg + alpha)),))
    return _record(out)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)
    out = Tensor(y, (a,), lambda g: (g * (1.0 - y ** 2),))
    return _record(out)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    y = 1.0 / (1.0 + np.exp(-np.clip(a.data, -500, 500)))
    out = Tensor(y, (a,), lambda g: (g * y * (1.0 - y),))
    return _record(out)


def softplus(a) -> Tensor:
    a = as_tensor(a)
    # log(1+e^x), computed stably
    y = np.maximum(a.data, 0.0) + np.log1p(np.exp(-np.abs(a.data)))
    s = 1.0 / (1.0 + np.exp(-np.clip(a.data, -500, 500)))
    out = Tensor(y, (a,), lambda g: (g * s,))
    return _record(out)


def softmax(a, axis=-1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _record(Tensor(y, (a,), vjp))


def masked_softmax(a, mask, axis=-1) -> Tensor:
    """Softmax over positions where `mask` is True; masked positions get
    probability exactly 0.  Every slice along `axis` must keep at least one
    unmasked entry."""
    a = as_tensor(a)
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), a.shape)
    if not mask.any(axis=axis).all():
        raise ShapeError("masked_softmax: a slice has no unmasked positions")
    neg = np.where(mask, a.data, -np.inf)
    shifted = neg - neg.max(axis=axis, keepdims=True)
    e = np.where(mask, np.exp(shifted), 0.0)
    y = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        return (np.where(mask, y * (g - (g * y).sum(axis=axis, keepdims=True)), 0.0),)

    return _record(Tensor(y, (a,), vjp))


def logsumexp(a, axis=-1) -> Tensor:
    a = as_tensor(a)
    hi = a.data.max(axis=axis, keepdims=True)
    y = np.log(np.exp(a.data - hi).sum(axis=axis)) + np.squeeze(hi, axis=axis)

    def vjp(g):
        soft = np.exp(a.data - np.expand_dims(y, axis))
        return (np.expand_dims(np.asarray(g), axis) * soft,)

    return _record(Tensor(y, (a,), vjp))


def clamp(a, lo, hi) -> Tensor:
    a = as_tensor(a)
    inside = (a.data >= lo) & (a.data <= hi)
    out = Tensor(np.clip(a.data, lo, hi), (a,),
                 lambda g: (np.where(inside, g, 0.0),))
    return _record(out)


# --------------------------------------------------- normalization / conv

def batch_norm(a, gamma, beta, eps=1e-5) -> Tensor:
    """Normalize over axis 0 with learnable affine.  A single row degrades
    to identity-with-affine (no statistics to normalize by)."""
    a, gamma, beta = as_tensor(a), as_tensor(gamma), as_tensor(beta)
    if a.data.shape[0] <= 1:
        return add(mul(a, gamma), beta)
    mu = a.data.mean(axis=0, keepdims=True)
    var = a.data.var(axis=0, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (a.data - mu) * inv
    n = a.data.shape[0]

    def vjp(g):
        gg = g * gamma.data
        dx = inv / n * (n * gg - gg.sum(axis=0, keepdims=True)
                        - xhat * (gg * xhat).sum(axis=0, keepdims=True))
        return (dx,
                _unbroadcast(g * xhat, gamma.shape),
                _unbroadcast(g, beta.shape))

    out = Tensor(xhat * gamma.data + beta.data, (a, gamma, beta), vjp)
    return _record(out)


def conv1d(x, w, b=None, padding=0) -> Tensor:
    """x: (C_in, L), w: (C_out, C_in, K), optional b: (C_out,).
    Stride-1 cross-correlation with symmetric zero padding."""
    x, w = as_tensor(x), as_tensor(w)
    c_in, length = x.data.shape
    c_out, c_in_w, k = w.data.shape
    if c_in != c_in_w:
        raise ShapeError(f"conv1d: input channels {c_in} != weight channels {c_in_w}")
    xp = np.pad(x.data, ((0, 0), (padding, padding)))
    l_out = xp.shape[1] - k + 1
    win = np.lib.stride_tricks.sliding_window_view(xp, k, axis=1)  # (C_in, L_out, K)
    y = np.einsum("oik,ilk->ol", w.data, win)
    parents = [x, w]
    if b is not None:
        b = as_tensor(b)
        y = y + b.data[:, None]
        parents.append(b)

    def vjp(g):
        dw = np.einsum("ol,ilk->oik", g, win)
        dxp = np.zeros_like(xp)
        for kk in range(k):
            dxp[:, kk:kk + l_out] += w.data[:, :, kk].T @ g
        dx = dxp[:, padding:padding + length] if padding else dxp
        grads = [dx, dw]
        if b is not None:
            grads.append(g.sum(axis=1))
        return tuple(grads)

    return _record(Tensor(y, tuple(parents), vjp))


def conv_transpose1d(x, w, b=None, stride=2, padding=1) -> Tensor:
    """x: (C_in, L), w: (C_in, C_out, K).  Output length (L-1)*stride
    - 2*padding + K; with K=4, stride=2, padding=1 the length doubles."""
    x, w = as_tensor(x), as_tensor(w)
    c_in, length = x.data.shape
    c_in_w, c_out, k = w.data.shape
    if c_in != c_in_w:
        raise ShapeError(f"conv_transpose1d: input channels {c_in} != weight channels {c_in_w}")
    l_out = (length - 1) * stride - 2 * padding + k
    y = np.zeros((c_out, l_out))
    positions = np.arange(length) * stride - padding
    spans = []  # (kk, valid input slice, valid output positions)
    for kk in range(k):
        t = positions + kk
        valid = (t >= 0) & (t < l_out)
        spans.append((kk, valid, t[valid]))
        y[:, t[valid]] += w.data[:, :, kk].T @ x.data[:, valid]
    parents = [x, w]
    if b is not None:
        b = as_tensor(b)
        y = y + b.data[:, None]
        parents.append(b)

    def vjp(g):
        dx = np.zeros_like(x.data)
        dw = np.zeros_like(w.data)
        for kk, valid, t in spans:
            dx[:, valid] += w.data[:, :, kk] @ g[:, t]
            dw[:, :, kk] += x.data[:, valid] @ g[:, t].T
        grads = [dx, dw]
        if b is not None:
            grads.append(g.sum(axis=1))
        return tuple(grads)

    return _record(Tensor(y, tuple(parents), vjp))


def adaptive_avg_pool1d(x, out_len) -> Tensor:
    """x: (C, L) -> (C, out_len); bin i averages x[:, floor(i*L/N) :
    ceil((i+1)*L/N)] (contiguous bins, standard floor/ceil edges)."""
    x = as_tensor(x)
    c, length = x.data.shape
    starts = (np.arange(out_len) * length) // out_len
    ends = -(-(np.arange(1, out_len + 1) * length) // out_len)  # ceil
    y = np.empty((c, out_len))
    for i in range(out_len):
        y[:, i] = x.data[:, starts[i]:ends[i]].mean(axis=1)

    def vjp(g):
        dx = np.zeros_like(x.data)
        for i in range(out_len):
            dx[:, starts[i]:ends[i]] += g[:, i:i + 1] / (ends[i] - starts[i])
        return (dx,)

    return _record(Tensor(y, (x,), vjp))


def interp_linear(x, out_len) -> Tensor:
    """x: (C, L) -> (C, out_len); piecewise-linear resize with endpoint
    alignment (first/last samples map onto each other)."""
    x = as_tensor(x)
    c, length = x.data.shape
    if length == 1 or out_len == 1:
        pos = np.zeros(out_len)
    else:
        pos = np.arange(out_len) * (length - 1) / (out_len - 1)
    lo = np.floor(pos).astype(np.int64)
    lo = np.minimum(lo, length - 1)
    hi = np.minimum(lo + 1, length - 1)
    frac = pos - lo
    y = x.data[:, lo] * (1.0 - frac) + x.data[:, hi] * frac

    def vjp(g):
        dx = np.zeros_like(x.data)
        np.add.at(dx, (slice(None), lo), g * (1.0 - frac))
        np.add.at(dx, (slice(None), hi), g * frac)
        return (dx,)

    return _record(Tensor(y, (x,), vjp))


# ---------------------------------------------------------------- grad check

def grad_check(f, params, h=1e-5, tol=1e-4):
    """Compare analytic gradients of scalar f(params) against central
    finite differences.  Returns (passed, max relative error)."""
    zero_grad(params)
    with Tape():
        loss = f()
    backward(loss)
    analytic = [p.grad.copy() for p in params]

    max_rel = 0.0
    for p, ag in zip(params, analytic):
        flat = p.data.reshape(-1)
        num = np.zeros_like(flat)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            with Tape():
                fp = f().data.item()
            flat[idx] = orig - h
            with Tape():
                fm = f().data.item()
            flat[idx] = orig
            num[idx] = (fp - fm) / (2.0 * h)
        num = num.reshape(p.data.shape)
        denom = max(np.abs(ag).max(), np.abs(num).max(), 1e-8)
        rel = np.abs(ag - num).max() / denom
        max_rel = max(max_rel, rel)
    return max_rel < tol, max_rel
