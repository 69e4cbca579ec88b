"""Reverse-mode autodiff over numpy arrays.

A small tape-based engine: every primitive builds a node recording its
parents and a backward closure. Values are plain numpy arrays in float32
or float64; every primitive output is checked for NaN/Inf and raises
NonFiniteValue on the spot, so error states never propagate silently.

Hot-path notes (2-core CPU):
  * attention masks are additive constants folded into the softmax
    primitive, not separate where() passes
  * never use ``**`` on arrays (numpy's pow loop is ~6x slower than
    explicit multiplies at these sizes)
"""

from __future__ import annotations

import contextlib
import os

import numpy as np


class ShapeMismatch(ValueError):
    """Operand shapes are incompatible for the requested primitive."""


class NonFiniteValue(FloatingPointError):
    """A primitive produced NaN or Inf."""


_GRAD_ENABLED = True
_FINITE_CHECK = os.environ.get("PLANACT_FINITE_CHECK", "1") != "0"

_ALLOWED_DTYPES = (np.float32, np.float64)


def _as_dtype(dtype):
    dt = np.dtype(dtype)
    if dt.type not in _ALLOWED_DTYPES:
        raise ShapeMismatch(f"unsupported dtype {dt}; use float32 or float64")
    return dt


def check_finite(arr: np.ndarray, what: str = "value") -> None:
    """Raise NonFiniteValue if arr contains NaN or Inf.

    Uses a float64 sum as a one-pass screen: any NaN/Inf in the array makes
    the sum non-finite, and no finite float32/float64 array of this size can
    overflow a float64 accumulator.
    """
    if not _FINITE_CHECK or arr.size == 0:
        return
    if not np.isfinite(arr.sum(dtype=np.float64)):
        raise NonFiniteValue(f"non-finite {what} (shape {arr.shape})")


def set_finite_check(enabled: bool) -> bool:
    """Toggle the per-primitive NaN/Inf check; returns the previous setting."""
    global _FINITE_CHECK
    prev = _FINITE_CHECK
    _FINITE_CHECK = enabled
    return prev


@contextlib.contextmanager
def no_grad():
    """Disable graph construction inside the block (inference paths)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class Tensor:
    """Immutable dense array node in the autodiff graph."""

    __slots__ = ("data", "requires_grad", "grad", "_backward", "_parents")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(_as_dtype(dtype), copy=False)
        elif arr.dtype.type not in _ALLOWED_DTYPES:
            arr = arr.astype(np.float32)
        self.data = arr
        self.requires_grad = requires_grad and _GRAD_ENABLED
        self.grad = None
        self._backward = None
        self._parents = ()

    # -- graph plumbing -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def astype(self, dtype) -> "Tensor":
        dt = _as_dtype(dtype)
        out = _make(self.data.astype(dt), (self,))
        if out.requires_grad:
            def back(g, self=self, src=self.data.dtype):
                _accum(self, g.astype(src))
            out._backward = back
        return out

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = g.astype(self.data.dtype, copy=True)
        else:
            self.grad += g

    def backward(self, grad=None) -> None:
        """Reverse-mode sweep from this (typically scalar) node."""
        if grad is None:
            grad = np.ones_like(self.data)
        else:
            grad = np.asarray(grad, dtype=self.data.dtype)
        topo: list[Tensor] = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = grad.copy()
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- operator sugar --------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return take(self, idx)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 or isinstance(shape[0], int) else shape[0])

    def transpose(self, axes):
        return transpose(self, axes)

    def sum(self, axis=None, keepdims=False):
        return reduce_sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return reduce_mean(self, axis, keepdims)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype.name}, grad={self.requires_grad})"


def _wrap(x, like: np.ndarray | None = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(x, dtype=dtype if dtype is not None else np.float32))


def _make(data: np.ndarray, parents: tuple) -> Tensor:
    check_finite(data, "primitive output")
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(p for p in parents if p.requires_grad)
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if t.requires_grad:
        t._accumulate(g)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum g down to ``shape`` (inverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, s) in enumerate(zip(g.shape, shape)) if s == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# -- elementwise arithmetic ----------------------------------------------

def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b, a.data)
    out = _make(a.data + b.data, (a, b))
    if out.requires_grad:
        def back(g, a=a, b=b):
            _accum(a, _unbroadcast(g, a.data.shape))
            _accum(b, _unbroadcast(g, b.data.shape))
        out._backward = back
    return out


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b, a.data if isinstance(a, Tensor) else None)
    out = _make(a.data - b.data, (a, b))
    if out.requires_grad:
        def back(g, a=a, b=b):
            _accum(a, _unbroadcast(g, a.data.shape))
            _accum(b, _unbroadcast(-g, b.data.shape))
        out._backward = back
    return out


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b, a.data)
    out = _make(a.data * b.data, (a, b))
    if out.requires_grad:
        def back(g, a=a, b=b):
            _accum(a, _unbroadcast(g * b.data, a.data.shape))
            _accum(b, _unbroadcast(g * a.data, b.data.shape))
        out._backward = back
    return out


def div(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b, a.data)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = _make(a.data / b.data, (a, b))
    if out.requires_grad:
        def back(g, a=a, b=b, out=out):
            _accum(a, _unbroadcast(g / b.data, a.data.shape))
            _accum(b, _unbroadcast(-g * out.data / b.data, b.data.shape))
        out._backward = back
    return out


# -- linear algebra --------------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeMismatch(f"matmul needs >=2-D operands, got {a.data.shape} @ {b.data.shape}")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeMismatch(f"matmul inner dims differ: {a.data.shape} @ {b.data.shape}")
    out = _make(np.matmul(a.data, b.data), (a, b))
    if out.requires_grad:
        def back(g, a=a, b=b):
            if a.requires_grad:
                ga = np.matmul(g, b.data.swapaxes(-1, -2))
                _accum(a, _unbroadcast(ga, a.data.shape))
            if b.requires_grad:
                gb = np.matmul(a.data.swapaxes(-1, -2), g)
                _accum(b, _unbroadcast(gb, b.data.shape))
        out._backward = back
    return out


# -- shape manipulation -----------------------------------------------------

def reshape(a, shape) -> Tensor:
    a = _wrap(a)
    out = _make(a.data.reshape(shape), (a,))
    if out.requires_grad:
        def back(g, a=a):
            _accum(a, g.reshape(a.data.shape))
        out._backward = back
    return out


def transpose(a, axes) -> Tensor:
    a = _wrap(a)
    out = _make(np.ascontiguousarray(a.data.transpose(axes)), (a,))
    if out.requires_grad:
        inv = np.argsort(axes)
        def back(g, a=a, inv=tuple(inv)):
            _accum(a, g.transpose(inv))
        out._backward = back
    return out


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    out = _make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors))
    if out.requires_grad:
        sizes = [t.data.shape[axis] for t in tensors]
        def back(g, tensors=tensors, sizes=sizes, axis=axis):
            offset = 0
            for t, s in zip(tensors, sizes):
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(offset, offset + s)
                _accum(t, g[tuple(sl)])
                offset += s
        out._backward = back
    return out


def take(a, idx) -> Tensor:
    """Basic slicing/indexing; gradient scatters back into zeros."""
    a = _wrap(a)
    out = _make(np.ascontiguousarray(a.data[idx]), (a,))
    if out.requires_grad:
        def back(g, a=a, idx=idx):
            full = np.zeros_like(a.data)
            np.add.at(full, idx, g)
            _accum(a, full)
        out._backward = back
    return out


# -- reductions -------------------------------------------------------------

def reduce_sum(a, axis=None, keepdims=False) -> Tensor:
    a = _wrap(a)
    out = _make(a.data.sum(axis=axis, keepdims=keepdims), (a,))
    if out.requires_grad:
        def back(g, a=a, axis=axis, keepdims=keepdims):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            _accum(a, np.broadcast_to(g, a.data.shape))
        out._backward = back
    return out


def reduce_mean(a, axis=None, keepdims=False) -> Tensor:
    a = _wrap(a)
    out = _make(a.data.mean(axis=axis, keepdims=keepdims), (a,))
    if out.requires_grad:
        count = a.data.size if axis is None else a.data.shape[axis]
        def back(g, a=a, axis=axis, keepdims=keepdims, count=count):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            _accum(a, np.broadcast_to(g, a.data.shape) / count)
        out._backward = back
    return out


# -- neural-net primitives ----------------------------------------------------

def softmax(a, additive_mask: np.ndarray | None = None) -> Tensor:
    """Row-wise softmax over the last axis, with max-subtraction.

    additive_mask, if given, is a constant broadcastable array added to the
    logits before normalization (0 for visible, large negative for blocked).
    Blocked entries come out exactly 0 because exp underflows.
    """
    a = _wrap(a)
    x = a.data + additive_mask if additive_mask is not None else a.data.copy()
    x -= x.max(axis=-1, keepdims=True)
    np.exp(x, out=x)
    x /= x.sum(axis=-1, keepdims=True)
    out = _make(x, (a,))
    if out.requires_grad:
        def back(g, a=a, out=out):
            p = out.data
            dot = (g * p).sum(axis=-1, keepdims=True)
            _accum(a, (g - dot) * p)
        out._backward = back
    return out


def masked_fill(a, mask: np.ndarray, value: float) -> Tensor:
    """Replace entries where mask is True by ``value`` (constant, no grad)."""
    a = _wrap(a)
    mask = np.asarray(mask, dtype=bool)
    out = _make(np.where(mask, a.data.dtype.type(value), a.data), (a,))
    if out.requires_grad:
        def back(g, a=a, mask=mask):
            _accum(a, np.where(mask, 0.0, g))
        out._backward = back
    return out


def layernorm(a, gain=None, bias=None, eps: float = 1e-5) -> Tensor:
    """Layer normalization over the last axis.

    Constant rows map to zeros before gain/bias: the centered numerator is
    exactly 0 and the eps keeps the denominator positive.
    """
    a = _wrap(a)
    mu = a.data.mean(axis=-1, keepdims=True)
    xc = a.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    y = xhat
    if gain is not None:
        y = y * gain.data
    if bias is not None:
        y = y + bias.data
    parents = (a,) + tuple(t for t in (gain, bias) if t is not None)
    out = _make(y, parents)
    if out.requires_grad:
        d = a.data.shape[-1]
        def back(g, a=a, gain=gain, bias=bias, xhat=xhat, inv=inv, d=d):
            gy = g * gain.data if gain is not None else g
            if a.requires_grad:
                mean_gy = gy.mean(axis=-1, keepdims=True)
                mean_gy_x = (gy * xhat).mean(axis=-1, keepdims=True)
                _accum(a, inv * (gy - mean_gy - xhat * mean_gy_x))
            if gain is not None and gain.requires_grad:
                red = tuple(range(g.ndim - 1))
                _accum(gain, (g * xhat).sum(axis=red))
            if bias is not None and bias.requires_grad:
                red = tuple(range(g.ndim - 1))
                _accum(bias, g.sum(axis=red))
        out._backward = back
    return out


_GELU_C = 0.7978845608028654  # sqrt(2/pi)


def gelu(a) -> Tensor:
    """Gaussian error linear unit (tanh formulation)."""
    a = _wrap(a)
    x = a.data
    u = _GELU_C * (x + 0.044715 * (x * x * x))
    t = np.tanh(u)
    out = _make(0.5 * x * (1.0 + t), (a,))
    if out.requires_grad:
        def back(g, a=a, x=x, t=t):
            du = _GELU_C * (1.0 + 3 * 0.044715 * (x * x))
            dt = (1.0 - t * t) * du
            _accum(a, g * (0.5 * (1.0 + t) + 0.5 * x * dt))
        out._backward = back
    return out


def embedding(table, ids: np.ndarray) -> Tensor:
    """Row lookup: table (V, d) indexed by integer ids of any shape."""
    table = _wrap(table)
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
        raise ShapeMismatch(
            f"embedding id out of range [0, {table.data.shape[0]}): "
            f"min={ids.min()}, max={ids.max()}")
    out = _make(table.data[ids], (table,))
    if out.requires_grad:
        def back(g, table=table, ids=ids):
            full = np.zeros_like(table.data)
            np.add.at(full, ids.reshape(-1), g.reshape(-1, table.data.shape[-1]))
            _accum(table, full)
        out._backward = back
    return out


def mse(a, b) -> Tensor:
    """Mean squared error over all elements."""
    a, b = _wrap(a), _wrap(b, a.data)
    if a.data.shape != b.data.shape:
        raise ShapeMismatch(f"mse shapes differ: {a.data.shape} vs {b.data.shape}")
    diff = a.data - b.data
    out = _make(np.asarray((diff * diff).mean(), dtype=a.data.dtype), (a, b))
    if out.requires_grad:
        def back(g, a=a, b=b, diff=diff):
            scale = 2.0 * g / diff.size
            _accum(a, scale * diff)
            _accum(b, -scale * diff)
        out._backward = back
    return out


def cross_entropy(logits, targets: np.ndarray, weight: np.ndarray | None = None) -> Tensor:
    """Mean token cross-entropy with a fused, stable log-softmax.

    logits: (N, V); targets: int (N,); weight: optional (N,) 0/1 mask --
    zero-weight rows (padding) contribute nothing to loss or gradient.
    """
    logits = _wrap(logits)
    if logits.data.ndim != 2:
        raise ShapeMismatch(f"cross_entropy expects (N, V) logits, got {logits.data.shape}")
    targets = np.asarray(targets, dtype=np.int64)
    n, v = logits.data.shape
    if targets.shape != (n,):
        raise ShapeMismatch(f"targets shape {targets.shape} != ({n},)")
    if targets.size and (targets.min() < 0 or targets.max() >= v):
        raise ShapeMismatch("cross_entropy target id out of range")
    x = logits.data
    m = x.max(axis=-1, keepdims=True)
    ex = np.exp(x - m)
    z = ex.sum(axis=-1, keepdims=True)
    logp = (x - m) - np.log(z)
    nll = -logp[np.arange(n), targets]
    if weight is None:
        denom = n
        loss = nll.sum() / denom
    else:
        weight = np.asarray(weight, dtype=x.dtype)
        denom = max(float(weight.sum()), 1.0)
        loss = (nll * weight).sum() / denom
    out = _make(np.asarray(loss, dtype=x.dtype), (logits,))
    if out.requires_grad:
        def back(g, logits=logits, ex=ex, z=z, targets=targets, weight=weight, denom=denom, n=n):
            p = ex / z
            p[np.arange(n), targets] -= 1.0
            if weight is not None:
                p *= weight[:, None]
            _accum(logits, g * p / denom)
        out._backward = back
    return out


# -- gradient utilities ---------------------------------------------------------

def grad(loss: Tensor, params) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss for every named parameter.

    Parameters unreachable from the loss get zero gradients. ``params`` is a
    mapping name -> Tensor (a ParameterStore works).
    """
    if loss.data.size != 1:
        raise ShapeMismatch(f"grad() needs a scalar loss, got shape {loss.data.shape}")
    items = params.items() if hasattr(params, "items") else params
    loss.backward()
    out = {}
    for name, t in items:
        out[name] = t.grad.copy() if t.grad is not None else np.zeros_like(t.data)
        check_finite(out[name], f"gradient of {name}")
    return out


def finite_diff(loss_fn, params, eps: float = 1e-5,
                max_coords_per_param: int | None = None, seed: int = 0) -> dict[str, np.ndarray]:
    """Central-difference gradients: (f(x+eps) - f(x-eps)) / (2 eps).

    loss_fn takes no arguments and reads the parameter tensors; entries are
    perturbed in place. Evaluate in float64. With max_coords_per_param set,
    only a deterministic random subset of coordinates per tensor is probed
    and the rest are NaN-free zeros with a companion mask in '<name>#probed'.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    items = list(params.items() if hasattr(params, "items") else params)
    rng = np.random.default_rng(seed)
    out = {}
    for name, t in items:
        flat = t.data.reshape(-1)
        n = flat.size
        if max_coords_per_param is not None and n > max_coords_per_param:
            coords = np.sort(rng.choice(n, size=max_coords_per_param, replace=False))
        else:
            coords = np.arange(n)
        g = np.zeros(n, dtype=np.float64)
        probed = np.zeros(n, dtype=bool)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            fp = float(loss_fn().data)
            flat[c] = orig - eps
            fm = float(loss_fn().data)
            flat[c] = orig
            g[c] = (fp - fm) / (2.0 * eps)
            probed[c] = True
        out[name] = g.reshape(t.data.shape)
        out[name + "#probed"] = probed.reshape(t.data.shape)
    return out
