"""Minimal reverse-mode automatic differentiation over dense numpy arrays.

Only the operations the recovery model needs: 3x3 same-padding convolution,
max pooling, elementwise nonlinearities, affine maps, batch normalization,
concatenation/slicing and an L1 loss. Every op checks its output for
NaN/Inf and records a tape node when any operand requires gradients.

Training runs in float32; gradient verification builds the same graph in
float64 (the dtype follows the parameters).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeMismatch(ValueError):
    pass


class NonFiniteValue(FloatingPointError):
    pass


class NoTape(RuntimeError):
    pass


_GRAD_ENABLED = True


class no_grad:
    """Context manager disabling tape recording (inference fast path)."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


def _check_finite(arr, opname):
    if not np.isfinite(arr).all():
        raise NonFiniteValue(f"non-finite values produced by {opname}")


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data.reshape(-1)[0])

    def detach(self):
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"


def _result(data, parents, backward_fn, opname):
    _check_finite(data, opname)
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


# ---------------------------------------------------------------------------
# elementwise / linear algebra


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"add: {a.shape} vs {b.shape}")
    return _result(a.data + b.data, (a, b), lambda g: (g, g), "add")


def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"sub: {a.shape} vs {b.shape}")
    return _result(a.data - b.data, (a, b), lambda g: (g, -g), "sub")


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"mul: {a.shape} vs {b.shape}")
    return _result(a.data * b.data, (a, b),
                   lambda g: (g * b.data, g * a.data), "mul")


def scale(a, k):
    a = _as_tensor(a)
    k = float(k)
    return _result(a.data * k, (a,), lambda g: (g * k,), "scale")


def relu(a):
    a = _as_tensor(a)
    out = np.maximum(a.data, 0)
    return _result(out, (a,), lambda g: (g * (a.data > 0),), "relu")


def sigmoid(a):
    a = _as_tensor(a)
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])  # stable branch for large negative inputs
    out[~pos] = ex / (1.0 + ex)
    return _result(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def tanh(a):
    a = _as_tensor(a)
    out = np.tanh(a.data)
    return _result(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def linear(x, w):
    """x @ w.T for x (N, D), w (O, D)."""
    x, w = _as_tensor(x), _as_tensor(w)
    if x.data.ndim != 2 or w.data.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeMismatch(f"linear: x {x.shape}, w {w.shape}")
    out = x.data @ w.data.T
    return _result(out, (x, w),
                   lambda g: (g @ w.data, g.T @ x.data), "linear")


def affine(x, w, b):
    """x @ w.T + b for x (N, D), w (O, D), b (O,)."""
    x, w, b = _as_tensor(x), _as_tensor(w), _as_tensor(b)
    if x.data.ndim != 2 or w.data.ndim != 2 or x.shape[1] != w.shape[1] \
            or b.shape != (w.shape[0],):
        raise ShapeMismatch(f"affine: x {x.shape}, w {w.shape}, b {b.shape}")
    out = x.data @ w.data.T + b.data
    return _result(out, (x, w, b),
                   lambda g: (g @ w.data, g.T @ x.data, g.sum(axis=0)), "affine")


def tsum(a):
    a = _as_tensor(a)
    out = np.asarray(a.data.sum(), dtype=a.dtype)
    return _result(out, (a,), lambda g: (np.broadcast_to(g, a.shape).astype(a.dtype, copy=True),), "sum")


def l1_diff_sum(a, b):
    """Scalar sum of |a - b|; subgradient 0 at exact zeros."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"l1_diff_sum: {a.shape} vs {b.shape}")
    d = a.data - b.data
    out = np.asarray(np.abs(d).sum(), dtype=a.dtype)
    s = np.sign(d)
    return _result(out, (a, b), lambda g: (g * s, -g * s), "l1_diff_sum")


def reshape(a, shape):
    a = _as_tensor(a)
    out = a.data.reshape(shape)
    return _result(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def concat(tensors, axis=0):
    ts = [_as_tensor(t) for t in tensors]
    out = np.concatenate([t.data for t in ts], axis=axis)
    sizes = [t.shape[axis] for t in ts]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g):
        return tuple(np.array_split(g, splits, axis=axis))

    return _result(out, ts, bwd, "concat")


def narrow(a, axis, start, length):
    """Contiguous slice [start, start+length) along one axis."""
    a = _as_tensor(a)
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    out = a.data[idx]

    def bwd(g):
        full = np.zeros(a.shape, dtype=g.dtype)
        full[idx] = g
        return (full,)

    return _result(out, (a,), bwd, "narrow")


# ---------------------------------------------------------------------------
# structured ops


def conv2d_3x3(x, w, b):
    """Same-size 3x3 convolution, stride 1, zero padding 1.

    x: (N, C, H, W), w: (O, C, 3, 3), b: (O,).
    """
    x, w, b = _as_tensor(x), _as_tensor(w), _as_tensor(b)
    if x.data.ndim != 4 or w.data.ndim != 4 or w.shape[2:] != (3, 3) \
            or x.shape[1] != w.shape[1] or b.shape != (w.shape[0],):
        raise ShapeMismatch(f"conv2d_3x3: x {x.shape}, w {w.shape}, b {b.shape}")
    n, c, h, wd = x.shape
    o = w.shape[0]
    xp = np.pad(x.data, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(2, 3))  # (N, C, H, W, 3, 3)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * h * wd, c * 9)
    wmat = w.data.reshape(o, c * 9)
    out = (cols @ wmat.T + b.data).reshape(n, h, wd, o).transpose(0, 3, 1, 2)

    def bwd(g):
        g2 = g.transpose(0, 2, 3, 1).reshape(n * h * wd, o)
        dw = (g2.T @ cols).reshape(w.shape)
        db = g2.sum(axis=0)
        dcols = (g2 @ wmat).reshape(n, h, wd, c, 3, 3)
        dxp = np.zeros((n, c, h + 2, wd + 2), dtype=g.dtype)
        for i in range(3):
            for j in range(3):
                dxp[:, :, i:i + h, j:j + wd] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return (dxp[:, :, 1:-1, 1:-1], dw, db)

    return _result(out, (x, w, b), bwd, "conv2d_3x3")


def maxpool(x, window):
    """Non-overlapping max pooling; window = (ph, pw) must divide (H, W).
    Ties take the first maximum in row-major window order."""
    x = _as_tensor(x)
    ph, pw = window
    if x.data.ndim != 4:
        raise ShapeMismatch(f"maxpool: expected 4-d input, got {x.shape}")
    n, c, h, w = x.shape
    if h % ph or w % pw:
        raise ShapeMismatch(f"maxpool: window {window} does not divide {h}x{w}")
    ho, wo = h // ph, w // pw
    xr = x.data.reshape(n, c, ho, ph, wo, pw).transpose(0, 1, 2, 4, 3, 5) \
        .reshape(n, c, ho, wo, ph * pw)
    amax = xr.argmax(axis=-1)
    out = np.take_along_axis(xr, amax[..., None], axis=-1)[..., 0]

    def bwd(g):
        gr = np.zeros((n, c, ho, wo, ph * pw), dtype=g.dtype)
        np.put_along_axis(gr, amax[..., None], g[..., None], axis=-1)
        dx = gr.reshape(n, c, ho, wo, ph, pw).transpose(0, 1, 2, 4, 3, 5) \
            .reshape(n, c, h, w)
        return (dx,)

    return _result(out, (x,), bwd, "maxpool")


def batchnorm(x, gamma, beta, running_mean, running_var, training,
              momentum=0.9, eps=1e-5):
    """Per-channel batch normalization over (N, H, W) of an NCHW tensor.

    `running_mean`/`running_var` are plain ndarrays, updated in place in
    training mode with the given momentum; eval mode reads them.
    """
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    if x.data.ndim != 4 or gamma.shape != (x.shape[1],) or beta.shape != (x.shape[1],):
        raise ShapeMismatch(f"batchnorm: x {x.shape}, gamma {gamma.shape}, beta {beta.shape}")
    c = x.shape[1]
    axes = (0, 2, 3)
    m = x.shape[0] * x.shape[2] * x.shape[3]
    if training:
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mu
        running_var *= momentum
        running_var += (1.0 - momentum) * var
    else:
        mu = running_mean.astype(x.dtype)
        var = running_var.astype(x.dtype)
    ivar = 1.0 / np.sqrt(var + eps)
    mu4 = mu.reshape(1, c, 1, 1)
    ivar4 = ivar.reshape(1, c, 1, 1)
    xhat = (x.data - mu4) * ivar4
    out = gamma.data.reshape(1, c, 1, 1) * xhat + beta.data.reshape(1, c, 1, 1)

    def bwd(g):
        dgamma = (g * xhat).sum(axis=axes)
        dbeta = g.sum(axis=axes)
        dxhat = g * gamma.data.reshape(1, c, 1, 1)
        if training:
            dx = (ivar4 / m) * (m * dxhat
                                - dxhat.sum(axis=axes).reshape(1, c, 1, 1)
                                - xhat * (dxhat * xhat).sum(axis=axes).reshape(1, c, 1, 1))
        else:
            dx = dxhat * ivar4
        return (dx, dgamma, dbeta)

    return _result(out, (x, gamma, beta), bwd, "batchnorm")


# ---------------------------------------------------------------------------
# recurrent steps


def basic_rnn_step(x_t, h_prev, u, v, w):
    """h_t = sigmoid(U x_t + V h_{t-1}); y_t = W h_t.

    Batched shapes: x_t (N, D), h_prev (N, H), u (H, D), v (H, H), w (O, H).
    """
    h_t = sigmoid(add(linear(x_t, u), linear(h_prev, v)))
    y_t = linear(h_t, w)
    return h_t, y_t


def lstm_step(x_t, h_prev, c_prev, wx, wh, b):
    """Canonical 4-gate LSTM cell; gate layout along the output axis is
    [input, forget, candidate, output].

    x_t (N, D), h_prev/c_prev (N, H), wx (4H, D), wh (4H, H), b (4H,).
    """
    hdim = h_prev.shape[1]
    if wx.shape[0] != 4 * hdim or wh.shape != (4 * hdim, hdim) or b.shape != (4 * hdim,):
        raise ShapeMismatch(f"lstm_step: wx {wx.shape}, wh {wh.shape}, b {b.shape}, H={hdim}")
    gates = add(affine(x_t, wx, b), linear(h_prev, wh))
    i = sigmoid(narrow(gates, 1, 0, hdim))
    f = sigmoid(narrow(gates, 1, hdim, hdim))
    g = tanh(narrow(gates, 1, 2 * hdim, hdim))
    o = sigmoid(narrow(gates, 1, 3 * hdim, hdim))
    c_t = add(mul(f, c_prev), mul(i, g))
    h_t = mul(o, tanh(c_t))
    return h_t, c_t


# ---------------------------------------------------------------------------
# backward pass


def backward(loss):
    """Reverse-topological gradient accumulation from a scalar loss.

    Gradients ADD into `.grad` of leaf tensors (parameters, inputs); the
    caller zeroes accumulators explicitly.
    """
    if loss.data.size != 1:
        raise ShapeMismatch("backward requires a scalar loss")
    if loss._backward is None:
        raise NoTape("loss was not produced by taped operations")

    topo = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in visited:
                stack.append((p, False))

    grad_map = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        g = grad_map.pop(id(node), None)
        if g is None:
            continue
        if node._backward is not None:
            pgrads = node._backward(g)
            for p, pg in zip(node._parents, pgrads):
                if pg is None or not p.requires_grad:
                    continue
                if id(p) in grad_map:
                    grad_map[id(p)] = grad_map[id(p)] + pg
                else:
                    grad_map[id(p)] = pg
        else:
            if node.grad is None:
                node.grad = np.zeros_like(node.data)
            node.grad += g


# ---------------------------------------------------------------------------
# parameters and optimizer


class ParameterStore:
    """Named parameters (with gradient accumulators) plus non-trainable
    buffers such as batchnorm running statistics."""

    def __init__(self):
        self.params = {}
        self.buffers = {}

    def add_param(self, name, array):
        if name in self.params or name in self.buffers:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = Tensor(np.asarray(array), requires_grad=True)
        t.grad = np.zeros_like(t.data)
        self.params[name] = t
        return t

    def add_buffer(self, name, array):
        if name in self.params or name in self.buffers:
            raise ValueError(f"duplicate buffer name {name!r}")
        self.buffers[name] = np.asarray(array)
        return self.buffers[name]

    def __getitem__(self, name):
        return self.params[name]

    def __contains__(self, name):
        return name in self.params

    def buffer(self, name):
        return self.buffers[name]

    def zero_grad(self):
        for t in self.params.values():
            t.grad = np.zeros_like(t.data)

    def num_parameters(self):
        return sum(t.data.size for t in self.params.values())

    def state_arrays(self):
        """All arrays (params then buffers) as an ordered name -> ndarray map."""
        out = {name: t.data for name, t in self.params.items()}
        out.update(self.buffers)
        return out

    def snapshot(self):
        return {name: arr.copy() for name, arr in self.state_arrays().items()}

    def restore(self, snap):
        for name, t in self.params.items():
            t.data = snap[name].copy()
        for name in self.buffers:
            self.buffers[name][...] = snap[name]

    def global_grad_norm(self):
        sq = 0.0
        for t in self.params.values():
            if t.grad is not None:
                sq += float((t.grad.astype(np.float64) ** 2).sum())
        return np.sqrt(sq)

    def clip_grad_norm(self, max_norm):
        norm = self.global_grad_norm()
        if norm > max_norm and norm > 0:
            k = np.float32(max_norm / norm) if next(iter(self.params.values())).dtype == np.float32 \
                else max_norm / norm
            for t in self.params.values():
                t.grad *= k
        return norm


class AdamState:
    """Adam with bias correction; decoupled-from-nothing plain L2 on the
    weight subset (biases and batchnorm gamma/beta excluded)."""

    def __init__(self, store, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8,
                 weight_decay=1e-4, decay_names=None):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        if decay_names is None:
            decay_names = {n for n in store.params if n.endswith(".w")
                           or n.endswith(".wx") or n.endswith(".wh")}
        self.decay_names = set(decay_names)
        self.m = {n: np.zeros_like(p.data) for n, p in store.params.items()}
        self.v = {n: np.zeros_like(p.data) for n, p in store.params.items()}


def adam_step(store, state):
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    for name, p in store.params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if state.weight_decay and name in state.decay_names:
            g = g + state.weight_decay * p.data
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        step = state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        p.data -= step.astype(p.data.dtype, copy=False)
