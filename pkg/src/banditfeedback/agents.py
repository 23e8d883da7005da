"""Trainers on logged bandit feedback.

All four methods share the cross-product parameterisation ``beta`` (length
K*K) and are deployed through the same greedy rule:

``mle``         logistic regression of the click on ``x kron e_a``.
``reweighted``  the same likelihood with each event weighted by 1/propensity.
``cb``          weighted multiclass log-likelihood of the clicked actions, the
                Jensen lower bound of the log IPS value of the softmax policy.
``bayes-map``   logistic likelihood plus the Gaussian prior
                ``N(mu * 1, (aI + bJ) kron (aI + bJ))``, maximised (MAP).

Objectives are *maximised*; every ``obj_grad_*`` returns the objective and its
gradient with respect to ``beta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .core import LogDataset
from .features import log_softmax

METHODS = ("mle", "reweighted", "cb", "bayes-map")

ObjGrad = Callable[[np.ndarray], tuple[float, np.ndarray]]


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PriorSpec:
    mu: float = -6.0
    a: float = 0.01
    b: float = 0.01
    num_items: int = 10

    def validate(self) -> None:
        if not self.a > 0:
            raise ValueError(f"prior scale a must be > 0, got {self.a}")
        if self.b < 0:
            raise ValueError(f"prior coupling b must be >= 0, got {self.b}")

    @property
    def mean(self) -> np.ndarray:
        return np.full(self.num_items**2, float(self.mu))

    def with_items(self, num_items: int) -> "PriorSpec":
        return PriorSpec(self.mu, self.a, self.b, num_items)


@dataclass(frozen=True)
class FitOptions:
    grad_tol: float = 1e-6
    max_iters: int = 10000
    l2_floor: float = 0.0
    weight_cap: Optional[float] = None

    def validate(self) -> None:
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.l2_floor < 0:
            raise ValueError("l2_floor must be >= 0")
        if self.weight_cap is not None and not self.weight_cap > 0:
            raise ValueError("weight_cap must be > 0")


@dataclass
class FitResult:
    beta: np.ndarray
    final_objective: float
    final_grad_norm: float
    iterations: int
    converged: bool


# -- objectives ---------------------------------------------------------------


def _require_events(data: LogDataset) -> None:
    if len(data) == 0:
        raise ValueError("empty dataset")


def _event_scores(beta: np.ndarray, data: LogDataset) -> tuple[np.ndarray, np.ndarray]:
    k = data.num_items
    x = data.views.astype(np.float64)
    b = np.asarray(beta, dtype=np.float64).reshape(k, k)
    return x, np.einsum("nk,kn->n", x, b[:, data.actions])


def _scatter_gradient(x: np.ndarray, actions: np.ndarray, r: np.ndarray, k: int) -> np.ndarray:
    """sum_n r_n * (x_n kron e_{a_n}) as a length K*K vector."""
    g = np.zeros((k, k))
    for j in range(k):
        sel = actions == j
        if sel.any():
            g[:, j] = r[sel] @ x[sel]
    return g.reshape(-1)


def _weights(data: LogDataset, opts: Optional[FitOptions]) -> np.ndarray:
    w = data.weights
    if opts is not None and opts.weight_cap is not None:
        w = np.minimum(w, opts.weight_cap)
    return w


def _weighted_loglik(beta, data: LogDataset, w: Optional[np.ndarray]) -> tuple[float, np.ndarray]:
    x, s = _event_scores(beta, data)
    c = data.clicks.astype(np.float64)
    # c log sigmoid(s) + (1-c) log(1 - sigmoid(s)) = c s - log(1 + e^s)
    ll = c * s - np.logaddexp(0.0, s)
    r = c - expit(s)
    if w is not None:
        ll = w * ll
        r = w * r
    return float(ll.sum()), _scatter_gradient(x, data.actions, r, data.num_items)


def obj_grad_likelihood(beta, data: LogDataset) -> tuple[float, np.ndarray]:
    _require_events(data)
    return _weighted_loglik(beta, data, None)


def obj_grad_reweighted(beta, data: LogDataset, opts: Optional[FitOptions] = None) -> tuple[float, np.ndarray]:
    _require_events(data)
    return _weighted_loglik(beta, data, _weights(data, opts))


def obj_grad_contextual_bandit(beta, data: LogDataset, opts: Optional[FitOptions] = None) -> tuple[float, np.ndarray]:
    _require_events(data)
    clicked = data.clicks == 1
    if not clicked.any():
        raise ValueError("no clicked events: objective constant in beta")
    k = data.num_items
    sub = data.subset(clicked)
    ww = _weights(sub, opts)
    x = sub.views.astype(np.float64)
    logp = log_softmax(x @ np.asarray(beta, dtype=np.float64).reshape(k, k))
    rows = np.arange(len(sub))
    objective = float(ww @ logp[rows, sub.actions])
    resid = -np.exp(logp)
    resid[rows, sub.actions] += 1.0
    grad = x.T @ (ww[:, None] * resid)
    return objective, grad.reshape(-1)


# -- structured prior ---------------------------------------------------------


def _factor_inverse_apply(y: np.ndarray, a: float, b: float, axis: int) -> np.ndarray:
    # (aI + bJ)^-1 = (1/a) (I - b/(a + K b) J)
    k = y.shape[axis]
    return (y - (b / (a + k * b)) * y.sum(axis=axis, keepdims=True)) / a


def _factor_apply(y: np.ndarray, a: float, b: float, axis: int) -> np.ndarray:
    return a * y + b * y.sum(axis=axis, keepdims=True)


def prior_precision_apply(prior: PriorSpec, v) -> np.ndarray:
    """Sigma^-1 v with Sigma = M kron M, M = aI + bJ, without forming Sigma.

    For row-major vectorisation ``(A kron B) vec(V) = vec(A V B^T)``; both
    factors are symmetric so the product is ``M^-1 V M^-1``.
    """
    prior.validate()
    k = prior.num_items
    v = np.asarray(v, dtype=np.float64).reshape(k, k)
    out = _factor_inverse_apply(v, prior.a, prior.b, axis=0)
    out = _factor_inverse_apply(out, prior.a, prior.b, axis=1)
    return out.reshape(-1)


def prior_covariance_apply(prior: PriorSpec, v) -> np.ndarray:
    k = prior.num_items
    v = np.asarray(v, dtype=np.float64).reshape(k, k)
    out = _factor_apply(_factor_apply(v, prior.a, prior.b, axis=0), prior.a, prior.b, axis=1)
    return out.reshape(-1)


def dense_prior_covariance(prior: PriorSpec) -> np.ndarray:
    """Materialised (K^2 x K^2) covariance; for checks on small K only."""
    m = prior.a * np.eye(prior.num_items) + prior.b
    return np.kron(m, m)


def obj_grad_bayes_map(beta, data: LogDataset, prior: PriorSpec) -> tuple[float, np.ndarray]:
    prior.validate()
    beta = np.asarray(beta, dtype=np.float64)
    d = beta - prior.mu
    pd = prior_precision_apply(prior, d)
    objective = -0.5 * float(d @ pd)
    grad = -pd
    if len(data):
        ll, g = _weighted_loglik(beta, data, None)
        objective += ll
        grad = grad + g
    return objective, grad


# -- second derivatives (used by the Newton optimiser) -----------------------


def _weighted_loglik_hessian(beta, data: LogDataset, w: Optional[np.ndarray]) -> np.ndarray:
    k = data.num_items
    x, s = _event_scores(beta, data)
    p = expit(s)
    curv = p * (1.0 - p)
    if w is not None:
        curv = w * curv
    h = np.zeros((k, k, k, k))
    for j in range(k):
        sel = data.actions == j
        if sel.any():
            xs = x[sel]
            h[:, j, :, j] = -(xs.T * curv[sel]) @ xs
    return h.reshape(k * k, k * k)


def hessian_likelihood(beta, data: LogDataset) -> np.ndarray:
    return _weighted_loglik_hessian(beta, data, None)


def hessian_reweighted(beta, data: LogDataset, opts: Optional[FitOptions] = None) -> np.ndarray:
    return _weighted_loglik_hessian(beta, data, _weights(data, opts))


def hessian_contextual_bandit(beta, data: LogDataset, opts: Optional[FitOptions] = None) -> np.ndarray:
    k = data.num_items
    sub = data.subset(data.clicks == 1)
    ww = _weights(sub, opts)
    x = sub.views.astype(np.float64)
    p = np.exp(log_softmax(x @ np.asarray(beta, dtype=np.float64).reshape(k, k)))
    # per event: -(x x^T) kron (diag(p) - p p^T)
    diag = np.einsum("n,ni,nj,na->iaj", ww, x, x, p)
    h = np.zeros((k, k, k, k))
    for a in range(k):
        h[:, a, :, a] = -diag[:, a, :]
    z = (np.sqrt(ww)[:, None, None] * x[:, :, None] * p[:, None, :]).reshape(len(sub), k * k)
    return h.reshape(k * k, k * k) + z.T @ z


def hessian_bayes_map(beta, data: LogDataset, prior: PriorSpec) -> np.ndarray:
    k = prior.num_items
    m_inv = np.linalg.inv(prior.a * np.eye(k) + prior.b)
    h = -np.kron(m_inv, m_inv)
    if len(data):
        h = h + _weighted_loglik_hessian(beta, data, None)
    return h


# -- optimisation -------------------------------------------------------------


def _check_finite(f, g, iteration: int) -> None:
    if not math.isfinite(f) or not np.all(np.isfinite(g)):
        raise OptimizationError(f"non-finite objective or gradient at iteration {iteration}")


def _newton(objective_and_gradient: ObjGrad, hessian, beta0, opts: FitOptions) -> FitResult:
    """Damped Newton ascent with Armijo backtracking.

    The Newton system is solved in the eigenbasis of the negated Hessian; flat
    directions are floored at a relative cutoff and a Levenberg-Marquardt
    shift is added whenever the line search fails.
    """
    beta = np.array(beta0, dtype=np.float64)
    f, g = objective_and_gradient(beta)
    _check_finite(f, g, 0)
    iterations = 0
    shift = 0.0
    while np.max(np.abs(g), initial=0.0) > opts.grad_tol and iterations < opts.max_iters:
        evals, evecs = np.linalg.eigh(-np.asarray(hessian(beta)))
        cutoff = 1e-12 * max(float(evals.max(initial=0.0)), 1.0)
        evals = np.maximum(evals, cutoff)
        proj = evecs.T @ g
        accepted = False
        while not accepted:
            direction = evecs @ (proj / (evals + shift))
            slope = float(g @ direction)
            step = 1.0
            for _ in range(60):
                candidate = beta + step * direction
                f_new, g_new = objective_and_gradient(candidate)
                if math.isfinite(f_new) and f_new >= f + 1e-4 * step * slope and f_new >= f:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                shift = max(10.0 * shift, cutoff)
                if shift > 1e30:
                    break
        iterations += 1
        if not accepted:
            break
        _check_finite(f_new, g_new, iterations)
        shift = shift / 10.0 if step == 1.0 else shift
        if f_new == f and np.array_equal(candidate, beta):
            break
        beta, f, g = candidate, f_new, g_new
    grad_norm = float(np.max(np.abs(g), initial=0.0))
    return FitResult(beta, float(f), grad_norm, iterations, grad_norm <= opts.grad_tol)


def _lbfgs(objective_and_gradient: ObjGrad, beta0, opts: FitOptions) -> FitResult:
    state = {"iter": 0}

    def neg(beta):
        f, g = objective_and_gradient(beta)
        _check_finite(f, g, state["iter"])
        return -f, -np.asarray(g, dtype=np.float64)

    def count(_):
        state["iter"] += 1

    beta = np.array(beta0, dtype=np.float64)
    f, g = neg(beta)
    while np.max(np.abs(g), initial=0.0) > opts.grad_tol and state["iter"] < opts.max_iters:
        remaining = opts.max_iters - state["iter"]
        res = minimize(
            neg, beta, jac=True, method="L-BFGS-B", callback=count,
            options={"maxiter": remaining, "maxfun": 20 * remaining + 100, "ftol": 0.0,
                     "gtol": opts.grad_tol, "maxcor": 20, "maxls": 50},
        )
        if not res.fun < f:
            break
        beta, f, g = res.x, float(res.fun), res.jac
    grad_norm = float(np.max(np.abs(g), initial=0.0))
    return FitResult(beta, -float(f), grad_norm, state["iter"], grad_norm <= opts.grad_tol)


def optimize(objective_and_gradient: ObjGrad, beta0, opts: FitOptions = FitOptions(),
             hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> FitResult:
    """Maximise a smooth concave objective.

    Stops once the infinity norm of the gradient is at most ``opts.grad_tol``
    or after ``opts.max_iters`` iterations; only steps that do not decrease
    the objective are accepted. With a ``hessian`` callable a damped Newton
    method is used, otherwise L-BFGS (restarted with cleared memory when its
    line search stalls).
    """
    opts.validate()
    if hessian is not None:
        return _newton(objective_and_gradient, hessian, beta0, opts)
    return _lbfgs(objective_and_gradient, beta0, opts)


def objective_for(method: str, data: LogDataset, prior: Optional[PriorSpec] = None,
                  opts: FitOptions = FitOptions()) -> tuple[ObjGrad, Callable[[np.ndarray], np.ndarray]]:
    """The (objective-and-gradient, Hessian) pair ``fit`` optimises for ``method``."""
    if method == "mle":
        _require_events(data)
        base = lambda beta: obj_grad_likelihood(beta, data)  # noqa: E731
        hess = lambda beta: hessian_likelihood(beta, data)  # noqa: E731
    elif method == "reweighted":
        _require_events(data)
        base = lambda beta: obj_grad_reweighted(beta, data, opts)  # noqa: E731
        hess = lambda beta: hessian_reweighted(beta, data, opts)  # noqa: E731
    elif method == "cb":
        if not np.any(data.clicks == 1):
            raise ValueError("no clicked events: objective constant in beta")
        base = lambda beta: obj_grad_contextual_bandit(beta, data, opts)  # noqa: E731
        hess = lambda beta: hessian_contextual_bandit(beta, data, opts)  # noqa: E731
    elif method == "bayes-map":
        prior = (prior or PriorSpec()).with_items(data.num_items)
        prior.validate()
        return (lambda beta: obj_grad_bayes_map(beta, data, prior),
                lambda beta: hessian_bayes_map(beta, data, prior))
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if opts.l2_floor == 0:
        return base, hess

    def ridged(beta):
        f, g = base(beta)
        return f - 0.5 * opts.l2_floor * float(beta @ beta), g - opts.l2_floor * beta

    def ridged_hess(beta):
        return hess(beta) - opts.l2_floor * np.eye(beta.shape[0])

    return ridged, ridged_hess


def fit(method: str, data: LogDataset, prior: Optional[PriorSpec] = None,
        opts: FitOptions = FitOptions()) -> FitResult:
    """Train ``method`` on ``data``; point estimators start at 0, MAP at the prior mean."""
    k = data.num_items
    objective, hessian = objective_for(method, data, prior, opts)
    if method == "bayes-map":
        beta0 = (prior or PriorSpec()).with_items(k).mean
    else:
        beta0 = np.zeros(k * k)
    return optimize(objective, beta0, opts, hessian=hessian)
