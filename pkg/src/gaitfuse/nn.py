"""Minimal float64 neural substrate with hand-derived backward passes.

Covers exactly what the latent models and the dynamics surrogates need:
dense layers, multi-head self-attention encoder blocks with sinusoidal
positional encoding, MSE / Gaussian-KL losses, Adam, plateau learning-rate
scheduling, and a linear KL warm-up.  Everything runs in float64 so
central-difference gradient checks can be strict; speed is irrelevant at
desk scale.

Layers are stateless between calls: ``forward`` returns ``(y, cache)`` and
``backward(cache, dy)`` returns ``(dx, grads)`` with ``grads`` keyed like
``params()``.  Inference on a frozen model is therefore safe to run
concurrently; training mutates parameters and must stay single-writer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, ValidationError

Params = dict  # name -> ndarray, live references


def _xavier(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def _prefixed(d: Params, name: str) -> Params:
    return {f"{name}.{k}": v for k, v in d.items()}


def _unprefix(d: Params, name: str) -> Params:
    pre = name + "."
    return {k[len(pre):]: v for k, v in d.items() if k.startswith(pre)}


def _flatten_leading(x: np.ndarray) -> np.ndarray:
    return x.reshape(-1, x.shape[-1])


class Dense:
    """y = act(x @ W.T + b) with W of shape (out, in)."""

    def __init__(self, in_dim: int, out_dim: int, activation: str = "linear", rng=None):
        if activation not in ("linear", "relu", "tanh"):
            raise ValidationError(f"unknown activation {activation!r}")
        rng = rng or np.random.default_rng(0)
        self.W = _xavier(rng, out_dim, in_dim)
        self.b = np.zeros(out_dim)
        self.activation = activation
        self.in_dim, self.out_dim = in_dim, out_dim

    def params(self) -> Params:
        return {"W": self.W, "b": self.b}

    def forward(self, x: np.ndarray):
        if x.shape[-1] != self.in_dim:
            raise ShapeError(f"dense expects last dim {self.in_dim}, got {x.shape[-1]}")
        z = x @ self.W.T + self.b
        if self.activation == "relu":
            y = np.maximum(z, 0.0)
        elif self.activation == "tanh":
            y = np.tanh(z)
        else:
            y = z
        return y, (x, z, y)

    def backward(self, cache, dy: np.ndarray):
        x, z, y = cache
        if self.activation == "relu":
            da = dy * (z > 0)
        elif self.activation == "tanh":
            da = dy * (1.0 - y * y)
        else:
            da = dy
        da2 = _flatten_leading(da)
        x2 = _flatten_leading(x)
        grads = {"W": da2.T @ x2, "b": da2.sum(axis=0)}
        dx = da @ self.W
        return dx, grads


def softmax_rows(s: np.ndarray) -> np.ndarray:
    m = s.max(axis=-1, keepdims=True)
    e = np.exp(s - m)
    return e / e.sum(axis=-1, keepdims=True)


class MultiHeadAttention:
    """Bidirectional scaled-dot-product self-attention over (B, T, D)."""

    def __init__(self, width: int, n_heads: int = 10, rng=None):
        if width % n_heads != 0:
            raise ValidationError(f"width {width} not divisible by {n_heads} heads")
        rng = rng or np.random.default_rng(0)
        self.width, self.n_heads = width, n_heads
        self.head_dim = width // n_heads
        self.Wq = _xavier(rng, width, width)
        self.Wk = _xavier(rng, width, width)
        self.Wv = _xavier(rng, width, width)
        self.Wo = _xavier(rng, width, width)
        self.bo = np.zeros(width)

    def params(self) -> Params:
        return {"Wq": self.Wq, "Wk": self.Wk, "Wv": self.Wv, "Wo": self.Wo, "bo": self.bo}

    def _split(self, x: np.ndarray) -> np.ndarray:
        B, T, _ = x.shape
        return x.reshape(B, T, self.n_heads, self.head_dim).transpose(0, 2, 1, 3)

    def _merge(self, x: np.ndarray) -> np.ndarray:
        B, H, T, hd = x.shape
        return x.transpose(0, 2, 1, 3).reshape(B, T, H * hd)

    def forward(self, x: np.ndarray):
        if x.ndim != 3 or x.shape[-1] != self.width:
            raise ShapeError(f"attention expects (B, T, {self.width}), got {x.shape}")
        q = self._split(x @ self.Wq.T)
        k = self._split(x @ self.Wk.T)
        v = self._split(x @ self.Wv.T)
        scores = q @ k.swapaxes(-1, -2) / math.sqrt(self.head_dim)
        attn = softmax_rows(scores)
        heads = attn @ v
        merged = self._merge(heads)
        y = merged @ self.Wo.T + self.bo
        return y, (x, q, k, v, attn, merged)

    def backward(self, cache, dy: np.ndarray):
        x, q, k, v, attn, merged = cache
        dy2, m2 = _flatten_leading(dy), _flatten_leading(merged)
        grads = {"Wo": dy2.T @ m2, "bo": dy2.sum(axis=0)}
        dmerged = dy @ self.Wo
        dheads = self._split(dmerged)
        dattn = dheads @ v.swapaxes(-1, -2)
        dv = attn.swapaxes(-1, -2) @ dheads
        # softmax rows: dS = A * (dA - sum(dA * A))
        dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
        dscores /= math.sqrt(self.head_dim)
        dq = dscores @ k
        dk = dscores.swapaxes(-1, -2) @ q
        dq, dk, dv = self._merge(dq), self._merge(dk), self._merge(dv)
        x2 = _flatten_leading(x)
        grads["Wq"] = _flatten_leading(dq).T @ x2
        grads["Wk"] = _flatten_leading(dk).T @ x2
        grads["Wv"] = _flatten_leading(dv).T @ x2
        dx = dq @ self.Wq + dk @ self.Wk + dv @ self.Wv
        return dx, grads

    def attention_weights(self, cache) -> np.ndarray:
        return cache[4]


class EncoderBlock:
    """Self-attention and a two-layer feed-forward, both with residuals."""

    def __init__(self, width: int, ff_width: int, n_heads: int, rng=None):
        rng = rng or np.random.default_rng(0)
        self.attn = MultiHeadAttention(width, n_heads, rng)
        self.ff1 = Dense(width, ff_width, "relu", rng)
        self.ff2 = Dense(ff_width, width, "linear", rng)

    def params(self) -> Params:
        return {
            **_prefixed(self.attn.params(), "attn"),
            **_prefixed(self.ff1.params(), "ff1"),
            **_prefixed(self.ff2.params(), "ff2"),
        }

    def forward(self, x: np.ndarray):
        a, c_attn = self.attn.forward(x)
        y1 = x + a
        h, c1 = self.ff1.forward(y1)
        f, c2 = self.ff2.forward(h)
        return y1 + f, (c_attn, c1, c2)

    def backward(self, cache, dy: np.ndarray):
        c_attn, c1, c2 = cache
        dh, g2 = self.ff2.backward(c2, dy)
        dy1_ff, g1 = self.ff1.backward(c1, dh)
        dy1 = dy + dy1_ff
        dx_attn, g_attn = self.attn.backward(c_attn, dy1)
        dx = dy1 + dx_attn
        return dx, {
            **_prefixed(g_attn, "attn"),
            **_prefixed(g1, "ff1"),
            **_prefixed(g2, "ff2"),
        }


def sinusoidal_positions(max_len: int, width: int) -> np.ndarray:
    pe = np.zeros((max_len, width))
    pos = np.arange(max_len)[:, None]
    div = np.exp(np.arange(0, width, 2) * (-math.log(10000.0) / width))
    pe[:, 0::2] = np.sin(pos * div)
    pe[:, 1::2] = np.cos(pos * div[: pe[:, 1::2].shape[1]])
    return pe


class TransformerEncoder:
    """Input projection + positional encoding + stacked encoder blocks +
    linear readout; maps (B, T, c_in) to (B, T, c_out)."""

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        width: int = 40,
        ff_width: int = 80,
        n_blocks: int = 3,
        n_heads: int = 10,
        max_len: int = 512,
        rng=None,
    ):
        rng = rng or np.random.default_rng(0)
        self.in_proj = Dense(in_dim, width, "linear", rng)
        self.blocks = [EncoderBlock(width, ff_width, n_heads, rng) for _ in range(n_blocks)]
        self.out_proj = Dense(width, out_dim, "linear", rng)
        self.pe = sinusoidal_positions(max_len, width)
        self.in_dim, self.out_dim, self.width = in_dim, out_dim, width
        self.ff_width, self.n_blocks, self.n_heads = ff_width, n_blocks, n_heads
        self.max_len = max_len

    def params(self) -> Params:
        p = _prefixed(self.in_proj.params(), "in_proj")
        for i, blk in enumerate(self.blocks):
            p.update(_prefixed(blk.params(), f"blocks.{i}"))
        p.update(_prefixed(self.out_proj.params(), "out_proj"))
        return p

    def forward(self, x: np.ndarray):
        squeeze = x.ndim == 2
        if squeeze:
            x = x[None]
        T = x.shape[1]
        if T > self.max_len:
            raise ShapeError(f"sequence length {T} exceeds positional table {self.max_len}")
        h, c_in = self.in_proj.forward(x)
        h = h + self.pe[:T]
        caches = []
        for blk in self.blocks:
            h, c = blk.forward(h)
            caches.append(c)
        y, c_out = self.out_proj.forward(h)
        if squeeze:
            y = y[0]
        return y, (squeeze, c_in, caches, c_out)

    def backward(self, cache, dy: np.ndarray):
        squeeze, c_in, caches, c_out = cache
        if squeeze:
            dy = dy[None]
        dh, g_out = self.out_proj.backward(c_out, dy)
        grads = _prefixed(g_out, "out_proj")
        for i in reversed(range(len(self.blocks))):
            dh, g = self.blocks[i].backward(caches[i], dh)
            grads.update(_prefixed(g, f"blocks.{i}"))
        dx, g_in = self.in_proj.backward(c_in, dh)
        grads.update(_prefixed(g_in, "in_proj"))
        if squeeze:
            dx = dx[0]
        return dx, grads


class MLP:
    """Dense stack; ``dims`` includes input and output widths."""

    def __init__(self, dims, activations=None, rng=None):
        rng = rng or np.random.default_rng(0)
        n = len(dims) - 1
        if activations is None:
            activations = ["relu"] * (n - 1) + ["linear"]
        if len(activations) != n:
            raise ValidationError("one activation per layer required")
        self.layers = [
            Dense(dims[i], dims[i + 1], activations[i], rng) for i in range(n)
        ]
        self.dims = tuple(dims)
        self.activations = tuple(activations)

    def params(self) -> Params:
        p = {}
        for i, lyr in enumerate(self.layers):
            p.update(_prefixed(lyr.params(), f"layers.{i}"))
        return p

    def forward(self, x: np.ndarray):
        caches = []
        for lyr in self.layers:
            x, c = lyr.forward(x)
            caches.append(c)
        return x, caches

    def backward(self, cache, dy: np.ndarray):
        grads = {}
        for i in reversed(range(len(self.layers))):
            dy, g = self.layers[i].backward(cache[i], dy)
            grads.update(_prefixed(g, f"layers.{i}"))
        return dy, grads


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------


def mse_loss(pred: np.ndarray, target: np.ndarray):
    if pred.shape != target.shape:
        raise ShapeError(f"mse shapes differ: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def kl_gaussian(mu: np.ndarray, log_sigma: np.ndarray) -> float:
    """KL(N(mu, diag(sigma^2)) || N(0, I)) summed over dimensions."""
    mu = np.asarray(mu, dtype=np.float64)
    log_sigma = np.asarray(log_sigma, dtype=np.float64)
    if mu.shape != log_sigma.shape:
        raise ShapeError("mu and log_sigma shapes differ")
    if not (np.isfinite(mu).all() and np.isfinite(log_sigma).all()):
        raise ValidationError("non-finite KL inputs")
    sigma2 = np.exp(2.0 * log_sigma)
    return float(0.5 * np.sum(mu * mu + sigma2 - 1.0 - 2.0 * log_sigma))


def kl_gaussian_grad(mu: np.ndarray, log_sigma: np.ndarray):
    return mu.copy(), np.exp(2.0 * np.asarray(log_sigma)) - 1.0


# ---------------------------------------------------------------------------
# Optimization
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, params: Params, grads: Params) -> None:
    """Bias-corrected Adam update, in place on the live parameter arrays."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape mismatch for {name}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        mhat = m / (1 - b1**state.t)
        vhat = v / (1 - b2**state.t)
        p -= state.lr * mhat / (np.sqrt(vhat) + state.eps)


@dataclass
class PlateauScheduler:
    """Halve the learning rate after ``patience`` epochs without improvement."""

    patience: int = 5
    factor: float = 0.5
    min_lr: float = 1e-5
    best: float = math.inf
    wait: int = 0

    def step(self, loss: float, opt: AdamState) -> float:
        if loss < self.best:
            self.best = loss
            self.wait = 0
        else:
            self.wait += 1
            if self.wait > self.patience:
                opt.lr = max(opt.lr * self.factor, self.min_lr)
                self.wait = 0
        return opt.lr


@dataclass(frozen=True)
class KlWarmup:
    """Linear ramp of the KL weight: beta(e) = beta_max * min(1, e / ramp)."""

    beta_max: float = 0.5
    ramp_epochs: int = 25

    def beta(self, epoch: int) -> float:
        if self.ramp_epochs <= 0:
            return self.beta_max
        return self.beta_max * min(1.0, epoch / self.ramp_epochs)


def reparameterize(mu: np.ndarray, log_sigma: np.ndarray, rng):
    """z = mu + sigma * eps with eps ~ N(0, I); sigma below 1e-12 collapses
    to the deterministic limit z = mu.  ``rng`` is a Generator or a seed."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    sigma = np.exp(np.asarray(log_sigma, dtype=np.float64))
    eps = rng.standard_normal(np.shape(mu))
    z = mu + np.where(sigma < 1e-12, 0.0, sigma * eps)
    return z, eps
