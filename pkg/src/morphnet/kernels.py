"""Compiled per-word training and inference loops.

These are the hot paths: one call per word, one weight update per phone.
The function bodies are plain numpy so they can also run uncompiled;
setting MORPHNET_PURE_PYTHON=1 before import skips compilation, which is
useful for debugging and for checking that compilation changes nothing.
"""

from __future__ import annotations

import os

import numpy as np

PURE_PYTHON = os.environ.get("MORPHNET_PURE_PYTHON", "") not in ("", "0")


def _train_word(w_in, w_rec, w_out, b_h, b_out, m_rec, m_out,
                v_in, v_rec, v_out, vb_h, vb_out, ctx, X, T, lr, mom):
    """Forward + truncated backward over one word; mutates weights in place.

    X is (steps, input_width) starting with the boundary row; T is
    (steps, output_width) packed targets. Returns the word's summed
    halved squared error. ctx must be zeroed by the caller at word start.
    """
    err = 0.0
    for t in range(X.shape[0]):
        x = X[t]
        h = 1.0 / (1.0 + np.exp(-(w_in @ x + w_rec @ ctx + b_h)))
        y = 1.0 / (1.0 + np.exp(-(w_out @ h + b_out)))
        e = y - T[t]
        err += 0.5 * (e * e).sum()
        d_out = e * y * (1.0 - y)
        d_h = (w_out.T @ d_out) * h * (1.0 - h)
        g_out = np.outer(d_out, h) * m_out
        g_in = np.outer(d_h, x)
        g_rec = np.outer(d_h, ctx) * m_rec
        v_out *= mom
        v_out -= lr * g_out
        w_out += v_out
        v_in *= mom
        v_in -= lr * g_in
        w_in += v_in
        v_rec *= mom
        v_rec -= lr * g_rec
        w_rec += v_rec
        vb_out *= mom
        vb_out -= lr * d_out
        b_out += vb_out
        vb_h *= mom
        vb_h -= lr * d_h
        b_h += vb_h
        ctx[:] = h
    return err


def _forward_word(w_in, w_rec, w_out, b_h, b_out, ctx, X):
    """Forward pass over one word; returns (steps, output_width) outputs.

    Mutates only ctx. The final row holds the end-of-word head values
    used for identification.
    """
    Y = np.empty((X.shape[0], b_out.shape[0]))
    for t in range(X.shape[0]):
        h = 1.0 / (1.0 + np.exp(-(w_in @ X[t] + w_rec @ ctx + b_h)))
        Y[t] = 1.0 / (1.0 + np.exp(-(w_out @ h + b_out)))
        ctx[:] = h
    return Y


def _hidden_states(w_in, w_rec, b_h, ctx, X):
    """Hidden trajectory over one word; returns (steps, hidden_width)."""
    H = np.empty((X.shape[0], b_h.shape[0]))
    for t in range(X.shape[0]):
        h = 1.0 / (1.0 + np.exp(-(w_in @ X[t] + w_rec @ ctx + b_h)))
        H[t] = h
        ctx[:] = h
    return H


if PURE_PYTHON:
    train_word = _train_word
    forward_word = _forward_word
    hidden_states = _hidden_states
else:
    import numba

    train_word = numba.njit(cache=True)(_train_word)
    forward_word = numba.njit(cache=True)(_forward_word)
    hidden_states = numba.njit(cache=True)(_hidden_states)
