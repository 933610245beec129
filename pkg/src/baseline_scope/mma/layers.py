"""Neural building blocks with explicit forward/backward passes.

Every layer owns its parameter and gradient arrays (float64) and keeps a
stack of forward caches, so one parameter set can be applied several times
per example (e.g. word attention over every window row) as long as
backward calls mirror forward calls in reverse order. Gradients accumulate
until ``zero_grads``.
"""

from __future__ import annotations

import threading

import numpy as np

from . import kernels


def xavier(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape if shape is not None else (fan_in, fan_out))


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


class Layer:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._local = threading.local()

    @property
    def _stack(self) -> list:
        # caches are per-thread: read-only inference can run in parallel over
        # one parameter set, each thread seeing only its own forward state
        stack = getattr(self._local, "stack", None)
        if stack is None:
            stack = self._local.stack = []
        return stack

    def _register(self, name: str, array: np.ndarray) -> np.ndarray:
        array = np.asarray(array, dtype=np.float64)
        self.params[name] = array
        self.grads[name] = np.zeros_like(array)
        return array

    def zero_grads(self) -> None:
        for grad in self.grads.values():
            grad[...] = 0.0

    def reset(self) -> None:
        self._stack.clear()


class Linear(Layer):
    def __init__(self, rng, in_dim: int, out_dim: int):
        super().__init__()
        self._register("w", xavier(rng, in_dim, out_dim))
        self._register("b", np.zeros(out_dim))

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._stack.append(x)
        return x @ self.params["w"] + self.params["b"]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x = self._stack.pop()
        x2 = x.reshape(-1, x.shape[-1])
        d2 = dout.reshape(-1, dout.shape[-1])
        self.grads["w"] += x2.T @ d2
        self.grads["b"] += d2.sum(axis=0)
        return (d2 @ self.params["w"].T).reshape(x.shape)


class TanhProjection(Layer):
    """Affine map followed by tanh; used to bring module outputs to a shared scale."""

    def __init__(self, rng, in_dim: int, out_dim: int):
        super().__init__()
        self._register("w", xavier(rng, in_dim, out_dim))
        self._register("b", np.zeros(out_dim))

    def forward(self, x: np.ndarray) -> np.ndarray:
        out = np.tanh(x @ self.params["w"] + self.params["b"])
        self._stack.append((x, out))
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x, out = self._stack.pop()
        dpre = dout * (1.0 - out * out)
        self.grads["w"] += np.outer(x, dpre) if x.ndim == 1 else x.T @ dpre
        self.grads["b"] += dpre if dpre.ndim == 1 else dpre.sum(axis=0)
        return dpre @ self.params["w"].T


class AdditiveAttention(Layer):
    """score_i = v . tanh(W x_i + b); masked softmax with exact zeros."""

    def __init__(self, rng, in_dim: int, attn_dim: int):
        super().__init__()
        self._register("w", xavier(rng, in_dim, attn_dim))
        self._register("b", np.zeros(attn_dim))
        self._register("v", xavier(rng, attn_dim, 1, shape=(attn_dim,)))

    def weights(self, x: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
        n = x.shape[0]
        if mask is None:
            mask = np.ones(n, dtype=bool)
        if not mask.any():
            raise ValueError("attention over a fully-masked set")
        u = np.tanh(x @ self.params["w"] + self.params["b"])
        scores = u @ self.params["v"]
        shifted = scores - scores[mask].max()
        e = np.where(mask, np.exp(shifted), 0.0)
        alpha = e / e.sum()
        self._stack.append(("weights", x, u, alpha))
        return alpha

    def pool(self, x: np.ndarray, mask: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        alpha = self.weights(x, mask)
        mode, x_, u, alpha_ = self._stack.pop()
        self._stack.append(("pool", x_, u, alpha_))
        return alpha @ x, alpha

    def _backward_scores(self, x, u, alpha, dalpha) -> np.ndarray:
        # softmax backward; masked entries have alpha == 0, hence dscore == 0
        dscore = alpha * (dalpha - float(alpha @ dalpha))
        self.grads["v"] += u.T @ dscore
        dpre = np.outer(dscore, self.params["v"]) * (1.0 - u * u)
        self.grads["w"] += x.T @ dpre
        self.grads["b"] += dpre.sum(axis=0)
        return dpre @ self.params["w"].T

    def backward_weights(self, dalpha: np.ndarray) -> np.ndarray:
        mode, x, u, alpha = self._stack.pop()
        if mode != "weights":
            raise RuntimeError("cache mismatch: expected a weights() call")
        return self._backward_scores(x, u, alpha, dalpha)

    def backward_pool(self, dpooled: np.ndarray) -> np.ndarray:
        mode, x, u, alpha = self._stack.pop()
        if mode != "pool":
            raise RuntimeError("cache mismatch: expected a pool() call")
        dalpha = x @ dpooled
        dx = np.outer(alpha, dpooled)
        return dx + self._backward_scores(x, u, alpha, dalpha)


class BiLSTM(Layer):
    """Bidirectional LSTM over a sequence; returns the two final states."""

    def __init__(self, rng, in_dim: int, hidden: int):
        super().__init__()
        self.hidden = hidden
        for direction in ("f", "b"):
            self._register(f"wx_{direction}", xavier(rng, in_dim, 4 * hidden, shape=(in_dim, 4 * hidden)))
            self._register(f"wh_{direction}", xavier(rng, hidden, 4 * hidden, shape=(hidden, 4 * hidden)))
            bias = np.zeros(4 * hidden)
            bias[hidden:2 * hidden] = 1.0  # forget-gate bias
            self._register(f"b_{direction}", bias)

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x)
        x_rev = np.ascontiguousarray(x[::-1])
        fwd = kernels.lstm_forward(x, self.params["wx_f"], self.params["wh_f"], self.params["b_f"])
        bwd = kernels.lstm_forward(x_rev, self.params["wx_b"], self.params["wh_b"], self.params["b_b"])
        self._stack.append((x, x_rev, fwd, bwd))
        return np.concatenate([fwd[0][-1], bwd[0][-1]])

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x, x_rev, (h_f, c_f, g_f), (h_b, c_b, g_b) = self._stack.pop()
        steps = x.shape[0]
        dh_f = np.zeros((steps, self.hidden))
        dh_f[-1] = dout[: self.hidden]
        dx_f, dwx, dwh, db = kernels.lstm_backward(
            dh_f, x, self.params["wx_f"], self.params["wh_f"], h_f, c_f, g_f)
        self.grads["wx_f"] += dwx
        self.grads["wh_f"] += dwh
        self.grads["b_f"] += db
        dh_b = np.zeros((steps, self.hidden))
        dh_b[-1] = dout[self.hidden:]
        dx_b, dwx, dwh, db = kernels.lstm_backward(
            dh_b, x_rev, self.params["wx_b"], self.params["wh_b"], h_b, c_b, g_b)
        self.grads["wx_b"] += dwx
        self.grads["wh_b"] += dwh
        self.grads["b_b"] += db
        return dx_f + dx_b[::-1]


class LayerNorm(Layer):
    def __init__(self, dim: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self._register("g", np.ones(dim))
        self._register("b", np.zeros(dim))

    def forward(self, x: np.ndarray) -> np.ndarray:
        mu = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mu) * inv
        self._stack.append((xhat, inv))
        return xhat * self.params["g"] + self.params["b"]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        xhat, inv = self._stack.pop()
        self.grads["g"] += (dout * xhat).sum(axis=0)
        self.grads["b"] += dout.sum(axis=0)
        dxhat = dout * self.params["g"]
        return inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                      - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))


class MultiHeadSelfAttention(Layer):
    def __init__(self, rng, dim: int, heads: int):
        super().__init__()
        if dim % heads:
            raise ValueError(f"model dim {dim} not divisible by {heads} heads")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        for name in ("q", "k", "v", "o"):
            self._register(f"w{name}", xavier(rng, dim, dim))
            self._register(f"b{name}", np.zeros(dim))

    def _split(self, x: np.ndarray) -> np.ndarray:
        seq = x.shape[0]
        return x.reshape(seq, self.heads, self.head_dim).transpose(1, 0, 2)

    def _merge(self, x: np.ndarray) -> np.ndarray:
        return x.transpose(1, 0, 2).reshape(-1, self.dim)

    def forward(self, x: np.ndarray) -> np.ndarray:
        p = self.params
        q = self._split(x @ p["wq"] + p["bq"])
        k = self._split(x @ p["wk"] + p["bk"])
        v = self._split(x @ p["wv"] + p["bv"])
        scale = 1.0 / np.sqrt(self.head_dim)
        attn = softmax(np.einsum("hid,hjd->hij", q, k) * scale)
        ctx = self._merge(np.einsum("hij,hjd->hid", attn, v))
        self._stack.append((x, q, k, v, attn, ctx))
        return ctx @ p["wo"] + p["bo"]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x, q, k, v, attn, ctx = self._stack.pop()
        p = self.params
        scale = 1.0 / np.sqrt(self.head_dim)
        self.grads["wo"] += ctx.T @ dout
        self.grads["bo"] += dout.sum(axis=0)
        dctx = self._split(dout @ p["wo"].T)
        dattn = np.einsum("hid,hjd->hij", dctx, v)
        dv = np.einsum("hij,hid->hjd", attn, dctx)
        dscore = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
        dq = np.einsum("hij,hjd->hid", dscore, k) * scale
        dk = np.einsum("hij,hid->hjd", dscore, q) * scale
        dx = np.zeros_like(x)
        for name, dvalue in (("q", dq), ("k", dk), ("v", dv)):
            flat = self._merge(dvalue)
            self.grads[f"w{name}"] += x.T @ flat
            self.grads[f"b{name}"] += flat.sum(axis=0)
            dx += flat @ p[f"w{name}"].T
        return dx


class FeedForward(Layer):
    def __init__(self, rng, dim: int, hidden: int):
        super().__init__()
        self._register("w1", xavier(rng, dim, hidden))
        self._register("b1", np.zeros(hidden))
        self._register("w2", xavier(rng, hidden, dim))
        self._register("b2", np.zeros(dim))

    def forward(self, x: np.ndarray) -> np.ndarray:
        pre = x @ self.params["w1"] + self.params["b1"]
        act = np.maximum(pre, 0.0)
        self._stack.append((x, pre, act))
        return act @ self.params["w2"] + self.params["b2"]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x, pre, act = self._stack.pop()
        self.grads["w2"] += act.T @ dout
        self.grads["b2"] += dout.sum(axis=0)
        dact = (dout @ self.params["w2"].T) * (pre > 0.0)
        self.grads["w1"] += x.T @ dact
        self.grads["b1"] += dact.sum(axis=0)
        return dact @ self.params["w1"].T


class TransformerLayer(Layer):
    """Post-norm encoder block: LN(x + MHSA(x)) then LN(x + FFN(x))."""

    def __init__(self, rng, dim: int, heads: int, ff_hidden: int | None = None):
        super().__init__()
        self.mhsa = MultiHeadSelfAttention(rng, dim, heads)
        self.ln1 = LayerNorm(dim)
        self.ffn = FeedForward(rng, dim, ff_hidden or 4 * dim)
        self.ln2 = LayerNorm(dim)
        self.children = (self.mhsa, self.ln1, self.ffn, self.ln2)
        for child_name, child in zip(("mhsa", "ln1", "ffn", "ln2"), self.children):
            for name, param in child.params.items():
                self.params[f"{child_name}.{name}"] = param
                self.grads[f"{child_name}.{name}"] = child.grads[name]

    def zero_grads(self) -> None:
        for child in self.children:
            child.zero_grads()

    def reset(self) -> None:
        for child in self.children:
            child.reset()

    def forward(self, x: np.ndarray) -> np.ndarray:
        x1 = self.ln1.forward(x + self.mhsa.forward(x))
        return self.ln2.forward(x1 + self.ffn.forward(x1))

    def backward(self, dout: np.ndarray) -> np.ndarray:
        dx1 = self.ln2.backward(dout)
        dx1 = dx1 + self.ffn.backward(dx1)
        dx = self.ln1.backward(dx1)
        return dx + self.mhsa.backward(dx)


class LayerMix(Layer):
    """Softmax-weighted sum over the layer axis of stacked hidden states."""

    def __init__(self, layer_count: int):
        super().__init__()
        self._register("w", np.zeros(layer_count))

    def forward(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        beta = softmax(self.params["w"])
        mixed = np.einsum("l,lsd->sd", beta, states)
        self._stack.append((states, beta))
        return mixed, beta

    def backward(self, dmixed: np.ndarray) -> None:
        states, beta = self._stack.pop()
        dbeta = np.einsum("sd,lsd->l", dmixed, states)
        self.grads["w"] += beta * (dbeta - float(beta @ dbeta))


class Dropout(Layer):
    """Inverted dropout; identity when eval or rate 0."""

    def __init__(self, rate: float):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate {rate} outside [0, 1)")
        self.rate = rate

    def forward(self, x: np.ndarray, train: bool, rng: np.random.Generator | None) -> np.ndarray:
        if not train or self.rate == 0.0:
            self._stack.append(None)
            return x
        if rng is None:
            raise ValueError("training-mode dropout needs an rng")
        keep = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        self._stack.append(keep)
        return x * keep

    def backward(self, dout: np.ndarray) -> np.ndarray:
        keep = self._stack.pop()
        return dout if keep is None else dout * keep


def weighted_cross_entropy(logits: np.ndarray, label: int, weight: float = 1.0,
                           ) -> tuple[float, np.ndarray]:
    """Class-weighted softmax cross-entropy for one example; returns loss and dlogits."""
    shifted = logits - logits.max()
    log_probs = shifted - np.log(np.exp(shifted).sum())
    loss = -weight * log_probs[label]
    dlogits = weight * np.exp(log_probs)
    dlogits[label] -= weight
    return float(loss), dlogits
