"""(mu/mu_w, lambda)-CMA-ES with a box-clamped objective.

Sampled points are clamped to [0, 1]^n before evaluation, while the
distribution is updated with the unclamped samples.  The reported solution
is the (clamped) distribution mean after the last iteration.
"""

from __future__ import annotations

import math

import numpy as np

from .core import CMAESConfig, Objective, OptimizerResult, Trace


class CMAES:
    def __init__(self, x0, sigma0, popsize=None):
        n = len(x0)
        self.n = n
        self.lam = popsize or 4 + int(math.floor(3 * math.log(n)))
        self.mu = self.lam // 2
        w = math.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mueff = 1.0 / np.sum(self.weights**2)

        self.cs = (self.mueff + 2) / (n + self.mueff + 5)
        self.ds = 1 + 2 * max(0.0, math.sqrt((self.mueff - 1) / (n + 1)) - 1) + self.cs
        self.cc = (4 + self.mueff / n) / (n + 4 + 2 * self.mueff / n)
        self.c1 = 2 / ((n + 1.3) ** 2 + self.mueff)
        self.cmu = min(1 - self.c1, 2 * (self.mueff - 2 + 1 / self.mueff) / ((n + 2) ** 2 + self.mueff))
        self.chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n**2))

        self.mean = np.array(x0, dtype=float)
        self.sigma = float(sigma0)
        self.pc = np.zeros(n)
        self.ps = np.zeros(n)
        self.C = np.eye(n)
        self.B = np.eye(n)
        self.D = np.ones(n)
        self.invsqrtC = np.eye(n)
        self.generation = 0
        self._eigen_generation = 0

    def ask(self, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((self.lam, self.n))
        return self.mean + self.sigma * (z * self.D) @ self.B.T

    def tell(self, X: np.ndarray, losses: np.ndarray) -> None:
        n = self.n
        order = np.argsort(losses, kind="stable")[: self.mu]
        Y = (X[order] - self.mean) / self.sigma
        y_w = self.weights @ Y
        self.mean = self.mean + self.sigma * y_w
        self.generation += 1

        self.ps = (1 - self.cs) * self.ps + math.sqrt(self.cs * (2 - self.cs) * self.mueff) * (self.invsqrtC @ y_w)
        ps_norm = np.linalg.norm(self.ps)
        h_sig = ps_norm / math.sqrt(1 - (1 - self.cs) ** (2 * self.generation)) / self.chi_n < 1.4 + 2 / (n + 1)
        self.pc = (1 - self.cc) * self.pc + h_sig * math.sqrt(self.cc * (2 - self.cc) * self.mueff) * y_w

        rank_mu = (Y.T * self.weights) @ Y
        c1a = self.c1 * (1 - (1 - h_sig) * self.cc * (2 - self.cc))
        self.C = (1 - c1a - self.cmu) * self.C + self.c1 * np.outer(self.pc, self.pc) + self.cmu * rank_mu
        self.sigma *= math.exp((self.cs / self.ds) * (ps_norm / self.chi_n - 1))

        if not (np.all(np.isfinite(self.C)) and np.isfinite(self.sigma)):
            raise FloatingPointError(
                f"CMA-ES diverged at generation {self.generation}: sigma={self.sigma}, "
                f"finite C entries={np.isfinite(self.C).mean():.3f}"
            )
        if self.generation - self._eigen_generation > self.lam / (self.c1 + self.cmu) / n / 10:
            self.update_eigensystem()

    def update_eigensystem(self):
        self.C = np.triu(self.C) + np.triu(self.C, 1).T
        d2, self.B = np.linalg.eigh(self.C)
        d2 = np.maximum(d2, 1e-300)
        self.D = np.sqrt(d2)
        self.invsqrtC = (self.B / self.D) @ self.B.T
        self._eigen_generation = self.generation

    @property
    def max_std(self) -> float:
        return self.sigma * float(np.max(self.D))


def cma_es(obj: Objective, cfg: CMAESConfig = CMAESConfig(), rng=None) -> OptimizerResult:
    rng = np.random.default_rng(rng)
    es = CMAES(np.full(obj.dim, cfg.x0), cfg.sigma0, cfg.popsize)
    trace = Trace()
    for it in range(1, cfg.max_iters + 1):
        X = es.ask(rng)
        losses = obj.evaluate_batch(np.clip(X, 0.0, 1.0))
        es.tell(X, losses)
        trace.update(obj.best_loss)
        trace.record(it, obj.eval_count)
        if es.max_std < cfg.tol_x:
            break
    x = np.clip(es.mean, 0.0, 1.0)
    loss = obj.evaluate(x)
    trace.update(loss)
    trace.record(es.generation + 1, obj.eval_count)
    info = {"sigma": es.sigma, "generations": es.generation, "lambda": es.lam}
    return OptimizerResult(x, loss, obj.eval_count, trace.rows, "cma_es", info=info)
