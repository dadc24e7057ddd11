"""Dense 2-D tensors with reverse-mode automatic differentiation.

Everything the network touches runs through here: matrix products, the
leaky-ReLU family, masked row softmax, layer norm, dropout, Adam, and the
binary checkpoint format. The design is deliberately small: tensors are
strictly two-dimensional, ops are module-level functions that record a
vector-Jacobian closure, and backward() walks the graph once in reverse
topological order. Training runs in float32; gradient checks build the same
graph in float64.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import ConfigError, FormatError

LEAKY_SLOPE = 0.01

CHECKPOINT_MAGIC = b"HGCKPT1"


def _as_matrix(data, dtype=None) -> np.ndarray:
    arr = np.asarray(data, dtype=dtype)
    if dtype is None and not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float32)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise ConfigError(f"tensors are 2-D; got shape {arr.shape}")
    return arr


class Tensor:
    """A rows x cols matrix, optionally tracked by the autodiff graph.

    `grad` is None until backward() reaches the tensor; `grad_value()` reads
    it as zeros in that case, so parameters that never entered the graph
    report an exactly-zero gradient.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = _as_matrix(data, dtype)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._vjp = None

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def grad_value(self) -> np.ndarray:
        if self.grad is None:
            return np.zeros_like(self.data)
        return self.grad

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError("item() requires a single-element tensor")
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor({self.rows}x{self.cols}{flag})"


def _node(data: np.ndarray, parents: tuple[Tensor, ...], vjp) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.requires_grad = any(p.requires_grad for p in parents)
    out.grad = None
    if out.requires_grad:
        out._parents = parents
        out._vjp = vjp
    else:
        out._parents = ()
        out._vjp = None
    return out


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(tensor) into .grad across the recorded graph.

    The loss must be 1x1. Calling backward twice on the same node without
    clearing gradients is an error: accumulation across separate backward
    passes silently doubles gradients, which is never what training wants.
    """
    if loss.shape != (1, 1):
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ValueError("loss does not require grad; nothing to differentiate")
    if loss.grad is not None:
        raise RuntimeError("backward already ran on this node; zero gradients "
                           "and rebuild the graph before calling it again")

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
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    loss.grad = np.ones((1, 1), dtype=loss.data.dtype)
    for node in reversed(topo):
        if node._vjp is None or node.grad is None:
            continue
        for parent, g in zip(node._parents, node._vjp(node.grad)):
            if g is None or not parent.requires_grad:
                continue
            if parent.grad is None:
                parent.grad = g.copy() if g.base is not None else g
            else:
                parent.grad = parent.grad + g


def _unbroadcast(g: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if g.shape == shape:
        return g
    for axis in (0, 1):
        if shape[axis] == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.cols != b.rows:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def vjp(g):
        return (g @ b.data.T if a.requires_grad else None,
                a.data.T @ g if b.requires_grad else None)

    return _node(a.data @ b.data, (a, b), vjp)


def add(a: Tensor, b: Tensor) -> Tensor:
    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _node(a.data + b.data, (a, b), vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _node(a.data - b.data, (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    def vjp(g):
        return (_unbroadcast(g * b.data, a.shape),
                _unbroadcast(g * a.data, b.shape))

    return _node(a.data * b.data, (a, b), vjp)


def scale(a: Tensor, c: float) -> Tensor:
    return _node(a.data * c, (a,), lambda g: (g * c,))


def add_const(a: Tensor, c: float) -> Tensor:
    return _node(a.data + c, (a,), lambda g: (g,))


def neg(a: Tensor) -> Tensor:
    return _node(-a.data, (a,), lambda g: (-g,))


def transpose(a: Tensor) -> Tensor:
    return _node(a.data.T.copy(), (a,), lambda g: (g.T,))


def leaky_relu(x: Tensor, slope: float = LEAKY_SLOPE) -> Tensor:
    gate = np.where(x.data >= 0, 1.0, slope).astype(x.data.dtype)
    return _node(x.data * gate, (x,), lambda g: (g * gate,))


def sigmoid(x: Tensor) -> Tensor:
    # tanh half-angle form is overflow-safe for large |x|.
    s = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    return _node(s, (x,), lambda g: (g * s * (1.0 - s),))


def log(x: Tensor) -> Tensor:
    return _node(np.log(x.data), (x,), lambda g: (g / x.data,))


def clamp(x: Tensor, lo: float, hi: float) -> Tensor:
    gate = ((x.data >= lo) & (x.data <= hi)).astype(x.data.dtype)
    return _node(np.clip(x.data, lo, hi), (x,), lambda g: (g * gate,))


def concat_cols(parts: list[Tensor]) -> Tensor:
    widths = [p.cols for p in parts]
    offsets = np.cumsum([0] + widths)

    def vjp(g):
        return tuple(g[:, offsets[i] : offsets[i + 1]] for i in range(len(parts)))

    return _node(np.concatenate([p.data for p in parts], axis=1), tuple(parts), vjp)


def slice_rows(x: Tensor, start: int, stop: int) -> Tensor:
    def vjp(g):
        full = np.zeros_like(x.data)
        full[start:stop] = g
        return (full,)

    return _node(x.data[start:stop].copy(), (x,), vjp)


def sum_all(x: Tensor) -> Tensor:
    def vjp(g):
        return (np.full_like(x.data, g[0, 0]),)

    return _node(x.data.sum(dtype=x.data.dtype).reshape(1, 1), (x,), vjp)


def mean_all(x: Tensor) -> Tensor:
    inv = 1.0 / x.data.size

    def vjp(g):
        return (np.full_like(x.data, g[0, 0] * inv),)

    return _node((x.data.sum(dtype=x.data.dtype) * inv).reshape(1, 1), (x,), vjp)


def masked_softmax(scores: Tensor, mask: np.ndarray) -> Tensor:
    """Row-wise softmax over positions where `mask` is true; zeros elsewhere.

    `scores` is (r, c) or (1, c) broadcast against a boolean (r, c) mask.
    Rows with an empty mask are an error: a softmax over nothing has no
    meaningful value, and silently emitting zeros would hide graph bugs.
    Scores are shifted by the row max before exponentiation, so the result
    is invariant to adding a constant to a row.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-D")
    if scores.shape != mask.shape and not (scores.rows == 1 and scores.cols == mask.shape[1]):
        raise ValueError(f"scores shape {scores.shape} does not match mask {mask.shape}")
    if not mask.any(axis=1).all():
        raise ValueError("masked_softmax: a row has no unmasked entries")

    s = np.broadcast_to(scores.data, mask.shape)
    shifted = np.where(mask, s, -np.inf)
    shifted = shifted - shifted.max(axis=1, keepdims=True)
    e = np.exp(shifted, dtype=scores.data.dtype)
    e = np.where(mask, e, 0.0)
    out = e / e.sum(axis=1, keepdims=True)

    def vjp(g):
        inner = (g * out).sum(axis=1, keepdims=True)
        ds = out * (g - inner)
        return (_unbroadcast(ds, scores.shape),)

    return _node(out.astype(scores.data.dtype), (scores,), vjp)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-row normalization to mean 0, variance 1, then affine (1, d) params."""
    if gain.shape != (1, x.cols) or bias.shape != (1, x.cols):
        raise ValueError("layer_norm gain/bias must be (1, d)")
    mu = x.data.mean(axis=1, keepdims=True)
    var = x.data.var(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv

    def vjp(g):
        gx = None
        if x.requires_grad:
            dxhat = g * gain.data
            gx = (dxhat - dxhat.mean(axis=1, keepdims=True)
                  - xhat * (dxhat * xhat).mean(axis=1, keepdims=True)) * inv
        ggain = (g * xhat).sum(axis=0, keepdims=True) if gain.requires_grad else None
        gbias = g.sum(axis=0, keepdims=True) if bias.requires_grad else None
        return gx, ggain, gbias

    return _node(xhat * gain.data + bias.data, (x, gain, bias), vjp)


def dropout(x: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: keep with probability 1-rate, scale kept by 1/(1-rate).

    Callers apply this only in training mode; rate 0 is the identity.
    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate).astype(x.data.dtype) / (1.0 - rate)
    return _node(x.data * keep, (x,), lambda g: (g * keep,))


class Adam:
    """Adam with bias correction over a fixed parameter list.

    Parameters with no gradient (never touched by backward) are treated as
    having an exactly-zero gradient; from a fresh state that leaves them
    unchanged while t still advances.
    """

    def __init__(self, params: list[Tensor], lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ConfigError("lr must be positive")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for i, p in enumerate(self.params):
            g = p.grad_value()
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            mhat = self.m[i] / c1
            vhat = self.v[i] / c2
            p.data -= (self.lr * mhat / (np.sqrt(vhat) + self.eps)).astype(p.data.dtype)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None


def glorot(rows: int, cols: int, rng: np.random.Generator,
           dtype=np.float32) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols)).astype(dtype)


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_tensors(path, named: dict[str, np.ndarray], header_extra: dict | None = None) -> None:
    """Write named float32 tensors: magic, u32 LE header length, JSON header
    (names in order, shapes, extras), then raw f32 LE payloads in name order.
    """
    header = dict(header_extra or {})
    header["names"] = list(named.keys())
    header["shapes"] = {k: list(v.shape) for k, v in named.items()}
    blob = _canonical_json(header)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in header["names"]:
            arr = np.ascontiguousarray(named[name], dtype="<f4")
            fh.write(arr.tobytes())


def load_tensors(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, "
                              f"expected {CHECKPOINT_MAGIC!r}")
        raw_len = fh.read(4)
        if len(raw_len) != 4:
            raise FormatError(f"{path}: truncated header length")
        (hlen,) = struct.unpack("<I", raw_len)
        blob = fh.read(hlen)
        if len(blob) != hlen:
            raise FormatError(f"{path}: truncated header")
        try:
            header = json.loads(blob)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: header is not valid JSON") from exc
        if "names" not in header or "shapes" not in header:
            raise FormatError(f"{path}: header missing names/shapes")
        tensors: dict[str, np.ndarray] = {}
        for name in header["names"]:
            shape = header["shapes"].get(name)
            if not (isinstance(shape, list) and len(shape) == 2):
                raise FormatError(f"{path}: bad shape for tensor {name!r}")
            count = int(shape[0]) * int(shape[1])
            buf = fh.read(4 * count)
            if len(buf) != 4 * count:
                raise FormatError(f"{path}: truncated payload for {name!r}")
            tensors[name] = np.frombuffer(buf, dtype="<f4").reshape(shape).copy()
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after last tensor")
    return header, tensors
