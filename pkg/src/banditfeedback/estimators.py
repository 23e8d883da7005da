"""Off-policy value estimates computed from logged bandit feedback."""
from __future__ import annotations

import math

import numpy as np

from .core import LogDataset
from .features import log_softmax, scores


def _require_events(data: LogDataset) -> None:
    if len(data) == 0:
        raise ValueError("empty dataset")


def _target_probs(data: LogDataset, beta) -> np.ndarray:
    """Softmax-policy probability of each logged action."""
    logp = log_softmax(scores(data.views.astype(np.float64), beta))
    return np.exp(logp[np.arange(len(data)), data.actions])


def ips_terms(data: LogDataset, beta, cap: float | None = None) -> np.ndarray:
    """Per-event contributions ``c_n * pi_beta(a_n|x_n) * w_n``; their mean is the IPS value."""
    w = data.weights if cap is None else np.minimum(data.weights, cap)
    return data.clicks * _target_probs(data, beta) * w


def ips_value(data: LogDataset, beta) -> float:
    """Inverse propensity estimate of the softmax policy's clicks per event."""
    _require_events(data)
    return float(ips_terms(data, beta).mean())


def ips_value_clipped(data: LogDataset, beta, cap: float) -> float:
    if not cap > 0:
        raise ValueError("cap must be > 0")
    _require_events(data)
    return float(ips_terms(data, beta, cap).mean())


def jensen_lower_bound(data: LogDataset, beta) -> float:
    """Lower bound on ``log(sum_n w_n c_n pi_beta(a_n|x_n))``.

    Equals the click-weighted mean of ``log pi_beta`` plus the log of the total
    click weight. Exact when a single event is clicked or when all clicked
    events have the same target probability.
    """
    _require_events(data)
    clicked = data.clicks == 1
    if not clicked.any():
        raise ValueError("no clicked events")
    sub = data.subset(clicked)
    logp = log_softmax(scores(sub.views.astype(np.float64), beta))[np.arange(len(sub)), sub.actions]
    w = sub.weights
    total = float(w.sum())
    return float(w @ logp) / total + math.log(total)


def empirical_ctr(data: LogDataset) -> tuple[float, float]:
    _require_events(data)
    ctr = float(data.clicks.mean())
    return ctr, math.sqrt(ctr * (1.0 - ctr) / len(data))


def expected_ips_value(outcomes: LogDataset, probs: np.ndarray, beta) -> float:
    """Exact expectation of the IPS estimate over an enumerated outcome space.

    ``outcomes`` holds one event per possible (context, action, click) and
    ``probs`` their probabilities under the logging process. By linearity the
    expectation of the N-event mean equals that of a single event.
    """
    return float(np.asarray(probs) @ ips_terms(outcomes, beta))
