"""A small recommendation simulator with organic sessions and bandit events.

Each user first browses organically; the per-item view counts of that session
become the (frozen) context for the user's bandit events. Two user models are
available:

``latent-gaussian``
    Users carry a latent vector ``omega ~ N(0, I_L)``; items carry embeddings
    ``gamma`` (K x L, standard normal, drawn once per seed). Organic views are
    drawn from ``softmax(gamma @ omega)`` and the click probability of action
    ``a`` is ``sigmoid(click_bias + click_scale * gamma[a] @ omega)``.

``finite-type``
    Users belong to one of a few types, each with its own organic distribution
    and per-action click probabilities. Small instances can be enumerated
    exactly, which is what the exact oracles below rely on.

Random streams: the item embeddings depend on ``seed`` only; the user stream
of an :class:`Env` is seeded with ``SeedSequence([seed, stream])`` so several
independent user populations can share one catalogue.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, fields
from typing import Optional, Union

import numpy as np
from scipy.special import expit, gammaln, xlogy

from .core import LogDataset
from .features import softmax
from .policies import GreedyPolicy, Policy, get_logging_policy, sample_actions

LATENT = "latent-gaussian"
FINITE = "finite-type"
MODES = (LATENT, FINITE)

ENUMERATION_BUDGET = 10**6


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FiniteTypes:
    """Per-type prior, organic view distribution (T x K) and click table (T x K)."""

    prior: tuple
    organic: tuple
    click: tuple

    @property
    def prior_array(self) -> np.ndarray:
        return np.asarray(self.prior, dtype=np.float64)

    @property
    def organic_array(self) -> np.ndarray:
        return np.asarray(self.organic, dtype=np.float64)

    @property
    def click_array(self) -> np.ndarray:
        return np.asarray(self.click, dtype=np.float64)

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteTypes":
        def freeze(a):
            return tuple(tuple(float(v) for v in row) for row in a)

        return cls(tuple(float(p) for p in d["prior"]), freeze(d["organic"]), freeze(d["click"]))

    def to_dict(self) -> dict:
        return {"prior": list(self.prior), "organic": [list(r) for r in self.organic], "click": [list(r) for r in self.click]}


@dataclass(frozen=True)
class SimConfig:
    num_items: int = 10
    latent_dim: int = 2
    organic_mean_session: float = 10.0
    bandit_events_per_user: int = 10
    click_bias: float = -4.0
    click_scale: float = 1.0
    mode: str = LATENT
    finite_types: Optional[FiniteTypes] = None
    # fixed organic session length; None means geometric with the mean above
    session_length: Optional[int] = None
    seed: int = 0

    def validate(self) -> None:
        if self.num_items < 2:
            raise ConfigError("num_items must be >= 2")
        if self.latent_dim < 1:
            raise ConfigError("latent_dim must be >= 1")
        if self.organic_mean_session < 1:
            raise ConfigError("organic_mean_session must be >= 1")
        if self.bandit_events_per_user < 1:
            raise ConfigError("bandit_events_per_user must be >= 1")
        if self.session_length is not None and self.session_length < 1:
            raise ConfigError("session_length must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == FINITE:
            ft = self.finite_types
            if ft is None:
                raise ConfigError("finite-type mode needs a finite_types table")
            prior, organic, click = ft.prior_array, ft.organic_array, ft.click_array
            t = prior.shape[0]
            if organic.shape != (t, self.num_items) or click.shape != (t, self.num_items):
                raise ConfigError("finite_types organic/click tables must have shape (types, num_items)")
            if np.any(prior < 0) or not math.isclose(prior.sum(), 1.0, abs_tol=1e-9):
                raise ConfigError("finite_types prior must be a probability vector")
            if np.any(organic < 0) or not np.allclose(organic.sum(axis=1), 1.0, atol=1e-9):
                raise ConfigError("finite_types organic rows must be probability vectors")
            if np.any(click <= 0) or np.any(click >= 1):
                raise ConfigError("finite_types click probabilities must lie in (0, 1)")

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown simulator keys: {sorted(unknown)}")
        kwargs = dict(d)
        if kwargs.get("finite_types") is not None:
            kwargs["finite_types"] = FiniteTypes.from_dict(kwargs["finite_types"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        if self.finite_types is not None:
            d["finite_types"] = self.finite_types.to_dict()
        return d


@dataclass
class Env:
    config: SimConfig
    gamma: np.ndarray
    rng: np.random.Generator
    stream: int = 0
    _next_user: int = field(default=0, repr=False)

    def with_stream(self, stream: int) -> "Env":
        """Same catalogue, fresh independent user stream."""
        return Env(self.config, self.gamma, _stream_rng(self.config.seed, stream), stream)


@dataclass(frozen=True)
class Users:
    """A batch of users: latent vectors (or type ids) and organic view counts."""

    ids: np.ndarray
    latent: np.ndarray
    views: np.ndarray

    def __len__(self) -> int:
        return self.views.shape[0]


@dataclass(frozen=True)
class UserSample:
    user_id: int
    latent: Union[np.ndarray, int]
    context: np.ndarray


def _stream_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream]))


def new_env(config: SimConfig, stream: int = 0) -> Env:
    config.validate()
    gamma_rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    gamma = gamma_rng.standard_normal((config.num_items, config.latent_dim))
    gamma.setflags(write=False)
    return Env(config, gamma, _stream_rng(config.seed, stream), stream)


def _session_lengths(env: Env, n: int) -> np.ndarray:
    cfg = env.config
    if cfg.session_length is not None:
        return np.full(n, cfg.session_length, dtype=np.int64)
    return env.rng.geometric(1.0 / cfg.organic_mean_session, size=n)


def organic_probs(env: Env, latent: np.ndarray) -> np.ndarray:
    """Organic view distribution for each user in the batch, shape (U, K)."""
    if env.config.mode == FINITE:
        return env.config.finite_types.organic_array[latent]
    return softmax(latent @ env.gamma.T)


def sample_users(env: Env, n: int) -> Users:
    cfg = env.config
    if cfg.mode == FINITE:
        prior = cfg.finite_types.prior_array
        latent = env.rng.choice(prior.shape[0], size=n, p=prior)
    else:
        latent = env.rng.standard_normal((n, cfg.latent_dim))
    lengths = _session_lengths(env, n)
    views = env.rng.multinomial(lengths, organic_probs(env, latent))
    ids = np.arange(env._next_user, env._next_user + n, dtype=np.int64)
    env._next_user += n
    return Users(ids, latent, views.astype(np.int64))


def sample_user(env: Env) -> UserSample:
    users = sample_users(env, 1)
    latent = users.latent[0]
    return UserSample(int(users.ids[0]), int(latent) if np.ndim(latent) == 0 else latent, users.views[0])


def click_probs(env: Env, latent: np.ndarray) -> np.ndarray:
    """Exact click probability of every action for each user, shape (U, K)."""
    cfg = env.config
    if cfg.mode == FINITE:
        return cfg.finite_types.click_array[latent]
    return expit(cfg.click_bias + cfg.click_scale * (latent @ env.gamma.T))


def click_prob(env: Env, user: UserSample, action: int) -> float:
    if not 0 <= action < env.config.num_items:
        raise ValueError(f"action {action} out of range")
    latent = np.asarray(user.latent)[None, ...]
    return float(click_probs(env, latent)[0, action])


def _resolve_policy(policy) -> Policy:
    return get_logging_policy(policy) if isinstance(policy, str) else policy


def generate_logs(env: Env, policy: Union[str, Policy], n_events: int,
                  events_per_user: Optional[int] = None) -> LogDataset:
    """Log ``n_events`` bandit events, ``bandit_events_per_user`` per fresh user."""
    if n_events < 1:
        raise ValueError("n_events must be >= 1")
    policy = _resolve_policy(policy)
    per_user = events_per_user or env.config.bandit_events_per_user
    users = sample_users(env, -(-n_events // per_user))
    owner = np.repeat(np.arange(len(users)), per_user)[:n_events]
    views = users.views[owner]
    actions, propensities = sample_actions(policy(views), env.rng)
    p_click = click_probs(env, users.latent)[owner, actions]
    clicks = (env.rng.random(n_events) < p_click).astype(np.int64)
    return LogDataset(env.config.num_items, users.ids[owner], views, actions, clicks, propensities)


def ab_test(env: Env, beta, n_events: int = 10000) -> tuple[float, float]:
    """Deploy the greedy policy of ``beta``; return (CTR, binomial stderr).

    Every A/B event goes to its own fresh user. Reusing a user for several
    events correlates their clicks, and the binomial standard error would
    then understate the spread of the CTR by the square root of the design
    effect (over 2x for heterogeneous users).
    """
    logs = generate_logs(env, GreedyPolicy(np.asarray(beta, dtype=np.float64)), n_events, events_per_user=1)
    ctr = float(logs.clicks.mean())
    return ctr, math.sqrt(ctr * (1.0 - ctr) / n_events)


def true_policy_value(env: Env, policy: Union[str, Policy], n_users: int) -> float:
    """Monte Carlo over users of the exact expected click rate (no click noise)."""
    if n_users < 1:
        raise ValueError("n_users must be >= 1")
    policy = _resolve_policy(policy)
    users = sample_users(env, n_users)
    per_user = np.sum(policy(users.views) * click_probs(env, users.latent), axis=1)
    return float(per_user.mean())


# -- exact enumeration (finite-type mode) ------------------------------------


def compositions(total: int, parts: int) -> np.ndarray:
    """All non-negative integer vectors of length ``parts`` summing to ``total``."""
    rows = []
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        edges = (-1,) + bars + (total + parts - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(parts)])
    return np.array(rows, dtype=np.int64).reshape(-1, parts)


def multinomial_pmf(counts: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """P(counts | probs) for each row of ``counts`` (C, K) and row of ``probs`` (T, K) -> (T, C)."""
    n = counts.sum(axis=1)
    log_coef = gammaln(n + 1) - gammaln(counts + 1).sum(axis=1)
    terms = xlogy(counts[None, :, :], probs[:, None, :])
    return np.exp(log_coef[None, :] + terms.sum(axis=2))


def _enumerable_contexts(env: Env) -> np.ndarray:
    cfg = env.config
    if cfg.mode != FINITE:
        raise ConfigError("exact enumeration is only available in finite-type mode")
    if cfg.session_length is None:
        raise ConfigError("exact enumeration needs a fixed session_length")
    size = math.comb(cfg.session_length + cfg.num_items - 1, cfg.num_items - 1)
    if size >= ENUMERATION_BUDGET:
        raise ConfigError(f"context space of {size} states exceeds the enumeration budget")
    return compositions(cfg.session_length, cfg.num_items)


def context_distribution(env: Env) -> tuple[np.ndarray, np.ndarray]:
    """Enumerate contexts; return them (C, K) with P(type, context) (T, C)."""
    contexts = _enumerable_contexts(env)
    ft = env.config.finite_types
    joint = ft.prior_array[:, None] * multinomial_pmf(contexts, ft.organic_array)
    return contexts, joint


def exact_policy_value_finite(env: Env, policy: Union[str, Policy]) -> float:
    """Expected click rate of ``policy`` by exhaustive enumeration of types and contexts."""
    policy = _resolve_policy(policy)
    contexts, joint = context_distribution(env)
    action_probs = policy(contexts)  # (C, K)
    value_given = action_probs @ env.config.finite_types.click_array.T  # (C, T)
    return float(np.sum(joint * value_given.T))


def enumerate_outcomes(env: Env, logging_policy: Union[str, Policy]) -> tuple[LogDataset, np.ndarray]:
    """Every reachable single-event outcome (context, action, click) with its probability.

    Returned as a dataset (one event per outcome, propensity set to the logging
    probability) and the matching probability vector, which sums to 1.
    """
    logging_policy = _resolve_policy(logging_policy)
    contexts, joint = context_distribution(env)
    click = env.config.finite_types.click_array
    mu = logging_policy(contexts)
    rows_views, rows_action, rows_click, rows_prop, probs = [], [], [], [], []
    n_types = joint.shape[0]
    for t in range(n_types):
        for c in range(contexts.shape[0]):
            if joint[t, c] == 0:
                continue
            for a in np.flatnonzero(mu[c] > 0):
                for outcome, p_outcome in ((1, click[t, a]), (0, 1.0 - click[t, a])):
                    rows_views.append(contexts[c])
                    rows_action.append(a)
                    rows_click.append(outcome)
                    rows_prop.append(mu[c, a])
                    probs.append(joint[t, c] * mu[c, a] * p_outcome)
    n = len(probs)
    data = LogDataset(env.config.num_items, np.zeros(n), np.array(rows_views), rows_action, rows_click, rows_prop)
    return data, np.array(probs)
