"""PGPE with symmetric sampling, centred-rank fitness shaping and ClipUp."""

from __future__ import annotations

import numpy as np

from .core import Objective, OptimizerResult, PGPEConfig, Trace

SIGMA_FLOOR = 1e-5


def centered_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks scaled to [-0.5, 0.5]; the largest value gets +0.5, ties by index."""
    n = len(values)
    ranks = np.empty(n)
    ranks[np.argsort(values, kind="stable")] = np.arange(n)
    if n == 1:
        return np.zeros(1)
    return ranks / (n - 1) - 0.5


class ClipUp:
    """Momentum SGD on normalized gradients with a hard cap on speed."""

    def __init__(self, n, step_size, momentum=0.9, max_speed=0.15):
        self.step_size = step_size
        self.momentum = momentum
        self.max_speed = max_speed
        self.velocity = np.zeros(n)

    def step(self, grad: np.ndarray) -> np.ndarray:
        """Return the update to add to the centre (ascent on ``grad``)."""
        norm = np.linalg.norm(grad)
        g = grad / norm if norm > 0 else grad
        v = self.momentum * self.velocity + self.step_size * g
        speed = np.linalg.norm(v)
        if speed > self.max_speed:
            v = v * (self.max_speed / speed)
        self.velocity = v
        return v


def pgpe_gradients(deltas: np.ndarray, f_plus: np.ndarray, f_minus: np.ndarray, sigma: np.ndarray):
    """PGPE gradient estimates for centre and standard deviation.

    ``f_plus``/``f_minus`` are shaped fitnesses (higher is better) of
    ``centre + delta`` and ``centre - delta``.
    """
    n_pairs = len(deltas)
    grad_center = ((f_plus - f_minus) / 2.0) @ deltas / n_pairs
    baseline = np.mean(np.concatenate([f_plus, f_minus]))
    avg = (f_plus + f_minus) / 2.0 - baseline
    grad_sigma = avg @ ((deltas**2 - sigma**2) / sigma) / n_pairs
    return grad_center, grad_sigma


def pgpe_clipup(obj: Objective, cfg: PGPEConfig = PGPEConfig(), rng=None) -> OptimizerResult:
    """Minimize with PGPE; the reported solution is the final centre."""
    rng = np.random.default_rng(rng)
    n = obj.dim
    pairs = cfg.population // 2
    center = rng.uniform(0.0, 1.0, n)
    sigma = np.full(n, cfg.sigma_init)
    opt = ClipUp(n, cfg.center_lr, cfg.clipup_momentum, cfg.clipup_max_speed)
    trace = Trace()
    speeds = []
    for gen in range(1, cfg.generations + 1):
        deltas = rng.normal(0.0, 1.0, (pairs, n)) * sigma
        X = np.empty((2 * pairs, n))
        X[0::2] = center + deltas
        X[1::2] = center - deltas
        losses = obj.evaluate_batch(np.clip(X, 0.0, 1.0))
        shaped = centered_ranks(-losses)
        g_c, g_s = pgpe_gradients(deltas, shaped[0::2], shaped[1::2], sigma)
        center = np.clip(center + opt.step(g_c), 0.0, 1.0)
        speeds.append(float(np.linalg.norm(opt.velocity)))
        change = np.clip(cfg.sigma_lr * g_s, -cfg.sigma_max_change * sigma, cfg.sigma_max_change * sigma)
        sigma = np.maximum(sigma + change, SIGMA_FLOOR)
        trace.update(obj.best_loss)
        trace.record(gen, obj.eval_count)
    loss = obj.evaluate(center)
    trace.update(loss)
    trace.record(cfg.generations + 1, obj.eval_count)
    info = {"sigma": sigma.tolist(), "speeds": speeds}
    return OptimizerResult(center, loss, obj.eval_count, trace.rows, "pgpe", info=info)
