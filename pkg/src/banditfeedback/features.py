"""Cross-product features, per-action scores and the two derived policies.

With ``phi(x, a) = x kron e_a`` the score of action ``a`` reduces to
``sum_i x[i] * beta[i*K + a]``, i.e. ``x @ beta.reshape(K, K)``. All functions
below accept a single context of shape (K,) or a batch of shape (N, K).
"""
from __future__ import annotations

import numpy as np


def kron_features(context, action: int) -> np.ndarray:
    """Dense ``context kron onehot(action)``, length K*K."""
    x = np.asarray(context, dtype=np.float64)
    k = x.shape[0]
    if not 0 <= action < k:
        raise ValueError(f"action {action} out of range for K={k}")
    onehot = np.zeros(k)
    onehot[action] = 1.0
    return np.kron(x, onehot)


def scores(context, beta) -> np.ndarray:
    x = np.asarray(context, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    k = x.shape[-1]
    if beta.shape != (k * k,):
        raise ValueError(f"beta of shape {beta.shape} does not match K={k}")
    return x @ beta.reshape(k, k)


def greedy_action(context, beta):
    """Argmax of the scores; ties go to the lowest action index."""
    s = scores(context, beta)
    a = np.argmax(s, axis=-1)
    return int(a) if np.ndim(a) == 0 else a


def log_softmax(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    shifted = s - s.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    e = np.exp(s - s.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def softmax_policy(context, beta) -> np.ndarray:
    return softmax(scores(context, beta))


def greedy_policy(context, beta) -> np.ndarray:
    """One-hot action distribution of :func:`greedy_action`."""
    s = scores(context, beta)
    out = np.zeros_like(s)
    np.put_along_axis(out, np.argmax(s, axis=-1)[..., None], 1.0, axis=-1)
    return out
