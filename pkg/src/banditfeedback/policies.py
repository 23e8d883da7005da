"""Logging (behaviour) policies and action sampling.

A policy here is any callable mapping contexts of shape (K,) or (N, K) to
action probabilities of the same shape.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .features import greedy_policy, softmax_policy

Policy = Callable[[np.ndarray], np.ndarray]


def popularity_probs(context) -> np.ndarray:
    """Probabilities proportional to the user's view counts.

    A user with no views at all gets the uniform distribution.
    """
    x = np.asarray(context, dtype=np.float64)
    total = x.sum(axis=-1, keepdims=True)
    k = x.shape[-1]
    empty = total == 0
    return np.where(empty, 1.0 / k, x / np.where(empty, 1.0, total))


def inverse_popularity_probs(context) -> np.ndarray:
    x = np.asarray(context)
    k = x.shape[-1]
    if k < 2:
        raise ValueError("inverse popularity needs at least two items (normaliser K-1 is zero)")
    return (1.0 - popularity_probs(x)) / (k - 1)


def uniform_probs(num_items: int) -> np.ndarray:
    if num_items < 1:
        raise ValueError("num_items must be >= 1")
    return np.full(num_items, 1.0 / num_items)


def _uniform_policy(context) -> np.ndarray:
    x = np.asarray(context)
    return np.full(x.shape, 1.0 / x.shape[-1])


LOGGING_POLICIES: dict[str, Policy] = {
    "popularity": popularity_probs,
    "inverse-popularity": inverse_popularity_probs,
    "uniform": _uniform_policy,
}


def get_logging_policy(name: str) -> Policy:
    try:
        return LOGGING_POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown logging policy {name!r}; choose from {sorted(LOGGING_POLICIES)}") from None


@dataclass(frozen=True)
class SoftmaxPolicy:
    beta: np.ndarray

    def __call__(self, context) -> np.ndarray:
        return softmax_policy(context, self.beta)


@dataclass(frozen=True)
class GreedyPolicy:
    beta: np.ndarray

    def __call__(self, context) -> np.ndarray:
        return greedy_policy(context, self.beta)


def _check_probs(probs: np.ndarray) -> None:
    if np.any(probs < 0):
        raise ValueError("probability vector has a negative entry")
    if not np.allclose(probs.sum(axis=-1), 1.0, rtol=0, atol=1e-9):
        raise ValueError("probability vector does not sum to 1")


def sample_actions(probs, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sample one action per row of ``probs`` (N, K) by inverse CDF.

    Returns the actions and their probabilities. Zero-probability actions are
    never returned.
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    _check_probs(probs)
    cum = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0]) * cum[:, -1]
    actions = np.argmax(cum > u[:, None], axis=1)
    return actions, probs[np.arange(probs.shape[0]), actions]


def sample_action(probs, rng: np.random.Generator) -> tuple[int, float]:
    actions, props = sample_actions(np.asarray(probs, dtype=np.float64)[None, :], rng)
    return int(actions[0]), float(props[0])
