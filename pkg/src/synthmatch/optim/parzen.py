"""Tree-structured Parzen estimator over the unit box.

After ``startup`` uniform trials the history is split into the
``ceil(gamma * n)`` best ("good") and the rest ("bad").  In every
dimension each set becomes a mixture of Gaussians truncated to [0, 1] plus
a uniform prior component.  Candidates drawn from the good mixtures are
ranked by the density ratio ``l(x) / g(x)``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr, ndtri

from .core import Objective, OptimizerResult, TPEConfig, Trace

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def good_set_size(n: int, gamma: float) -> int:
    return int(math.ceil(gamma * n))


class ParzenEstimator:
    """1-d mixture of truncated Gaussians on [0, 1] plus a uniform prior."""

    def __init__(self, points):
        self.mus = np.asarray(points, dtype=float)
        m = len(self.mus)
        # Scott-type rate n^(-1/(d+4)) with d = 1, scaled by the box width
        # rather than the sample spread so a tight cluster cannot collapse
        # the kernels; the floor is optuna's "magic clip"
        h = 0.2 * (m + 1) ** (-0.2)
        floor = 1.0 / min(100, m + 1)
        self.h = float(np.clip(h, floor, 1.0))
        self.w_prior = 1.0 / (m + 1)
        # mass of each kernel inside [0, 1]
        self.z = ndtr((1.0 - self.mus) / self.h) - ndtr(-self.mus / self.h)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        u = (x[..., None] - self.mus) / self.h
        k = np.exp(-0.5 * u * u) / (_SQRT_2PI * self.h * self.z)
        return self.w_prior * (1.0 + k.sum(axis=-1))

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        m = len(self.mus)
        comp = rng.integers(0, m + 1, size)  # equal weights; index m is the prior
        u = rng.uniform(size=size)
        out = u.copy()
        kern = comp < m
        if kern.any():
            mu = self.mus[comp[kern]]
            lo = ndtr(-mu / self.h)
            hi = ndtr((1.0 - mu) / self.h)
            out[kern] = mu + self.h * ndtri(lo + u[kern] * (hi - lo))
        return np.clip(out, 0.0, 1.0)


def tpe_suggest(X: np.ndarray, y: np.ndarray, cfg: TPEConfig, rng: np.random.Generator) -> np.ndarray:
    """Next point to try given the history ``(X, y)``.

    Densities are built per dimension, but candidates are whole vectors
    and are ranked by the product of the per-dimension ratios.
    """
    n_good = good_set_size(len(y), cfg.gamma)
    order = np.argsort(y, kind="stable")
    good, bad = X[order[:n_good]], X[order[n_good:]]
    cand = np.empty((cfg.candidates, X.shape[1]))
    score = np.zeros(cfg.candidates)
    for d in range(X.shape[1]):
        l = ParzenEstimator(good[:, d])
        g = ParzenEstimator(bad[:, d])
        cand[:, d] = l.sample(cfg.candidates, rng)
        score += np.log(l.pdf(cand[:, d])) - np.log(g.pdf(cand[:, d]))
    return cand[int(np.argmax(score))]


def tpe(obj: Objective, cfg: TPEConfig = TPEConfig(), rng=None) -> OptimizerResult:
    rng = np.random.default_rng(rng)
    X = np.empty((cfg.trials, obj.dim))
    y = np.empty(cfg.trials)
    trace = Trace()
    for t in range(cfg.trials):
        if t < cfg.startup:
            x = rng.uniform(0.0, 1.0, obj.dim)
        else:
            x = tpe_suggest(X[:t], y[:t], cfg, rng)
        X[t], y[t] = x, obj.evaluate(x)
        trace.update(y[t])
        trace.record(t + 1, obj.eval_count)
    k = int(np.argmin(y))
    return OptimizerResult(X[k].copy(), float(y[k]), obj.eval_count, trace.rows, "tpe")
