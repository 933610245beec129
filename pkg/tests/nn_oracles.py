"""Independent scalar oracles for the neural layers.

Deliberately written as plain Python loops over scalars (math.exp/tanh),
sharing no code with the package, so layer tests compare two genuinely
different computations.
"""

from __future__ import annotations

import math


def sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def scalar_lstm(x, wx, wh, b):
    """x: list of T lists (len D); returns list of T hidden lists (len H)."""
    steps = len(x)
    hidden = len(wh)
    h_prev = [0.0] * hidden
    c_prev = [0.0] * hidden
    outputs = []
    for t in range(steps):
        raw = [b[k] for k in range(4 * hidden)]
        for k in range(4 * hidden):
            for d in range(len(x[t])):
                raw[k] += x[t][d] * wx[d][k]
            for j in range(hidden):
                raw[k] += h_prev[j] * wh[j][k]
        c_new = []
        h_new = []
        for j in range(hidden):
            gi = sigmoid(raw[j])
            gf = sigmoid(raw[hidden + j])
            gc = math.tanh(raw[2 * hidden + j])
            go = sigmoid(raw[3 * hidden + j])
            c = gf * c_prev[j] + gi * gc
            c_new.append(c)
            h_new.append(go * math.tanh(c))
        h_prev, c_prev = h_new, c_new
        outputs.append(h_new)
    return outputs


def scalar_attention_pool(x, mask, w, b, v):
    """Additive attention pooled vector and weights over rows of x."""
    n = len(x)
    dim = len(x[0])
    attn_dim = len(b)
    scores = []
    for i in range(n):
        u = []
        for a in range(attn_dim):
            pre = b[a]
            for d in range(dim):
                pre += x[i][d] * w[d][a]
            u.append(math.tanh(pre))
        scores.append(sum(u[a] * v[a] for a in range(attn_dim)))
    kept = [s for s, m in zip(scores, mask) if m]
    peak = max(kept)
    exps = [math.exp(s - peak) if m else 0.0 for s, m in zip(scores, mask)]
    total = sum(exps)
    alpha = [e / total for e in exps]
    pooled = [sum(alpha[i] * x[i][d] for i in range(n)) for d in range(dim)]
    return pooled, alpha


def scalar_affine_tanh(x, w, b):
    out_dim = len(b)
    return [math.tanh(b[o] + sum(x[d] * w[d][o] for d in range(len(x)))) for o in range(out_dim)]


def scalar_softmax(values):
    peak = max(values)
    exps = [math.exp(x - peak) for x in values]
    total = sum(exps)
    return [e / total for e in exps]


def scalar_cross_entropy(logits, label, weight=1.0):
    probs = scalar_softmax(logits)
    return -weight * math.log(probs[label])
