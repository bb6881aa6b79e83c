"""Random search and finite-difference Adam."""

from __future__ import annotations

import numpy as np

from .core import AdamConfig, Objective, OptimizerResult, RandomSearchConfig, Trace


def random_search(obj: Objective, cfg: RandomSearchConfig = RandomSearchConfig(), rng=None) -> OptimizerResult:
    """Evaluate ``cfg.n`` uniform samples and keep the best (first on ties)."""
    rng = np.random.default_rng(rng)
    X = rng.uniform(0.0, 1.0, (cfg.n, obj.dim))
    losses = obj.evaluate_batch(X)
    trace = Trace()
    for i, loss in enumerate(losses):
        trace.update(loss)
        trace.record(i + 1, i + 1)
    k = int(np.argmin(losses))
    return OptimizerResult(X[k], float(losses[k]), obj.eval_count, trace.rows, "random_search")


def fd_gradient(obj: Objective, x: np.ndarray, eps: float = 1e-3) -> np.ndarray:
    """Central-difference gradient, with steps clipped to the unit box.

    Near a face of the box the step on that side is shortened, and the
    difference quotient divides by the step actually taken.  Costs
    ``2 * dim`` evaluations, ordered (x+e0, x-e0, x+e1, x-e1, ...).
    """
    n = len(x)
    eye = np.eye(n) * eps
    plus = np.clip(x + eye, 0.0, 1.0)
    minus = np.clip(x - eye, 0.0, 1.0)
    X = np.empty((2 * n, n))
    X[0::2] = plus
    X[1::2] = minus
    f = obj.evaluate_batch(X)
    width = np.diag(plus) - np.diag(minus)
    return (f[0::2] - f[1::2]) / width


class Adam:
    def __init__(self, n, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def step(self, grad: np.ndarray) -> np.ndarray:
        """Return the update to *add* to the parameters (descent direction)."""
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return -self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def adam_fd(obj: Objective, cfg: AdamConfig = AdamConfig(), rng=None) -> OptimizerResult:
    """Projected Adam on finite-difference gradients; returns the final iterate."""
    rng = np.random.default_rng(rng)
    x = rng.uniform(0.0, 1.0, obj.dim)
    opt = Adam(obj.dim, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    trace = Trace()
    for it in range(1, cfg.iters + 1):
        g = fd_gradient(obj, x, cfg.fd_eps)
        x = np.clip(x + opt.step(g), 0.0, 1.0)
        trace.update(obj.best_loss)
        trace.record(it, obj.eval_count)
    loss = obj.evaluate(x)
    trace.update(loss)
    trace.record(cfg.iters + 1, obj.eval_count)
    return OptimizerResult(x, loss, obj.eval_count, trace.rows, "adam_fd")
