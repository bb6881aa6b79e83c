"""Variational optimization over independent Beta distributions.

Each coordinate gets a Beta(alpha, beta) search distribution.  Both shape
parameters are kept positive through a softplus of an unconstrained value,
and the gradient of the expected loss is estimated with the score-function
(REINFORCE) estimator using the batch-mean loss as baseline.
"""

from __future__ import annotations

import numpy as np
from scipy.special import digamma, expit

from .core import Objective, OptimizerResult, Trace, VariationalConfig
from .simple import Adam

FLOOR = 1e-4


def softplus(a):
    return np.logaddexp(0.0, a)


def inverse_softplus(y):
    return np.log(np.expm1(y))


def beta_shape(raw: np.ndarray) -> np.ndarray:
    return np.maximum(softplus(raw), FLOOR)


def beta_score(u: np.ndarray, alpha: np.ndarray, beta: np.ndarray):
    """d/d(alpha, beta) of log Beta(u; alpha, beta), elementwise."""
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    common = digamma(alpha + beta)
    return np.log(u) - digamma(alpha) + common, np.log1p(-u) - digamma(beta) + common


def score_gradient(losses: np.ndarray, samples: np.ndarray, alpha: np.ndarray, beta: np.ndarray):
    """Baseline-corrected score-function estimate of d E[loss] / d(alpha, beta)."""
    adv = (losses - losses.mean())[:, None]
    s_a, s_b = beta_score(samples, alpha, beta)
    return (adv * s_a).mean(axis=0), (adv * s_b).mean(axis=0)


def variational_beta(obj: Objective, cfg: VariationalConfig = VariationalConfig(), rng=None) -> OptimizerResult:
    rng = np.random.default_rng(rng)
    n = obj.dim
    raw = np.full(2 * n, inverse_softplus(1.0))  # alpha = beta = 1: uniform
    opt = Adam(2 * n, cfg.lr)
    trace = Trace()
    best_x, best_loss = None, np.inf
    for it in range(1, cfg.iters + 1):
        alpha, beta = beta_shape(raw[:n]), beta_shape(raw[n:])
        X = rng.beta(alpha, beta, size=(cfg.batch, n))
        X = np.clip(X, 0.0, 1.0)
        losses = obj.evaluate_batch(X)
        g_a, g_b = score_gradient(losses, X, alpha, beta)
        # chain rule through softplus; zero where the floor is active
        g_raw = np.concatenate([
            g_a * expit(raw[:n]) * (softplus(raw[:n]) > FLOOR),
            g_b * expit(raw[n:]) * (softplus(raw[n:]) > FLOOR),
        ])
        raw = raw + opt.step(g_raw)
        k = int(np.argmin(losses))
        best_x, best_loss = X[k], float(losses[k])  # from the last batch only
        trace.update(obj.best_loss)
        trace.record(it, obj.eval_count)
    alpha, beta = beta_shape(raw[:n]), beta_shape(raw[n:])
    info = {"alpha": alpha.tolist(), "beta": beta.tolist()}
    return OptimizerResult(best_x, best_loss, obj.eval_count, trace.rows, "variational", info=info)
