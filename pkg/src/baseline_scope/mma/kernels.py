"""Hot numeric kernels: LSTM time loops and hash-embedding fills.

Each kernel exists twice: a pure-numpy implementation (the ``*_py`` names)
and, when numba is importable, an ``@njit``-compiled version of the same
source. The module-level names without suffix point at the active variant.
Set ``BASELINE_SCOPE_NUMBA=0`` to force the numpy path (or ``1`` to require
the compiled one); the default uses numba when available.

All kernels are deterministic and run in float64.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_ENV_VAR = "BASELINE_SCOPE_NUMBA"

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_TO_UNIT = float(2.0 ** -64)


def _select_numba() -> bool:
    flag = os.environ.get(NUMBA_ENV_VAR, "auto").strip().lower()
    if flag in ("0", "off", "false", "no"):
        return False
    if flag in ("1", "on", "true", "yes"):
        import numba  # noqa: F401  (fail loudly when explicitly requested)

        return True
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _select_numba()


def lstm_forward_py(x, wx, wh, b):
    """Run an LSTM over x (T, D); returns hidden, cell, and gate activations.

    Gate layout along the last axis is [input, forget, cell, output], each
    of width H, with activations already applied.
    """
    steps = x.shape[0]
    hidden = wh.shape[0]
    h = np.zeros((steps, hidden))
    c = np.zeros((steps, hidden))
    gates = np.zeros((steps, 4 * hidden))
    h_prev = np.zeros(hidden)
    c_prev = np.zeros(hidden)
    for t in range(steps):
        raw = np.dot(x[t], wx) + np.dot(h_prev, wh) + b
        gi = 1.0 / (1.0 + np.exp(-raw[:hidden]))
        gf = 1.0 / (1.0 + np.exp(-raw[hidden:2 * hidden]))
        gc = np.tanh(raw[2 * hidden:3 * hidden])
        go = 1.0 / (1.0 + np.exp(-raw[3 * hidden:]))
        c_prev = gf * c_prev + gi * gc
        h_prev = go * np.tanh(c_prev)
        h[t] = h_prev
        c[t] = c_prev
        gates[t, :hidden] = gi
        gates[t, hidden:2 * hidden] = gf
        gates[t, 2 * hidden:3 * hidden] = gc
        gates[t, 3 * hidden:] = go
    return h, c, gates


def lstm_backward_py(dh_out, x, wx, wh, h, c, gates):
    """Backpropagate through lstm_forward given dL/dh at every step."""
    steps = x.shape[0]
    hidden = wh.shape[0]
    dx = np.zeros_like(x)
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(4 * hidden)
    dh_next = np.zeros(hidden)
    dc_next = np.zeros(hidden)
    for t in range(steps - 1, -1, -1):
        gi = gates[t, :hidden]
        gf = gates[t, hidden:2 * hidden]
        gc = gates[t, 2 * hidden:3 * hidden]
        go = gates[t, 3 * hidden:]
        c_prev = c[t - 1] if t > 0 else np.zeros(hidden)
        h_prev = h[t - 1] if t > 0 else np.zeros(hidden)
        tanh_c = np.tanh(c[t])
        dh = dh_out[t] + dh_next
        dc = dh * go * (1.0 - tanh_c * tanh_c) + dc_next
        draw = np.empty(4 * hidden)
        draw[:hidden] = dc * gc * gi * (1.0 - gi)
        draw[hidden:2 * hidden] = dc * c_prev * gf * (1.0 - gf)
        draw[2 * hidden:3 * hidden] = dc * gi * (1.0 - gc * gc)
        draw[3 * hidden:] = dh * tanh_c * go * (1.0 - go)
        dwx += np.outer(x[t], draw)
        dwh += np.outer(h_prev, draw)
        db += draw
        dx[t] = np.dot(wx, draw)
        dh_next = np.dot(wh, draw)
        dc_next = dc * gf
    return dx, dwx, dwh, db


def hash_embed_py(ids, dim):
    """Deterministic embedding rows in [-1, 1) from 64-bit token ids.

    Column j of row i is the j-th output of a splitmix64 stream seeded with
    ids[i]; identical ids always produce identical rows.
    """
    n = ids.shape[0]
    out = np.empty((n, dim))
    state = ids.copy()
    for j in range(dim):
        state = state + _GAMMA
        z = state
        z = (z ^ (z >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
        z = z ^ (z >> _S31)
        out[:, j] = z.astype(np.float64) * _TO_UNIT * 2.0 - 1.0
    return out


if NUMBA_ENABLED:
    from numba import njit

    lstm_forward = njit(cache=True)(lstm_forward_py)
    lstm_backward = njit(cache=True)(lstm_backward_py)
    hash_embed = njit(cache=True)(hash_embed_py)
else:  # pragma: no cover - exercised when numba is absent or disabled
    lstm_forward = lstm_forward_py
    lstm_backward = lstm_backward_py
    hash_embed = hash_embed_py
