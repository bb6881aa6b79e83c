"""Steady-state genetic algorithm and best/1/bin differential evolution."""

from __future__ import annotations

import numpy as np

from .core import DEConfig, GeneticConfig, Objective, OptimizerResult, Trace


def single_point_crossover(a: np.ndarray, b: np.ndarray, point: int) -> np.ndarray:
    """First ``point`` genes from ``a``, the rest from ``b``."""
    return np.concatenate([a[:point], b[point:]])


def mutate(child: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Replace ``round(rate * n)`` distinct genes (at least one if rate > 0) with uniform values."""
    n = len(child)
    k = 0 if rate <= 0 else max(1, int(round(rate * n)))
    if k == 0:
        return child
    child = child.copy()
    idx = rng.choice(n, size=k, replace=False)
    child[idx] = rng.uniform(0.0, 1.0, k)
    return child


def ga_step(pop: np.ndarray, fit: np.ndarray, cfg: GeneticConfig, rng: np.random.Generator) -> np.ndarray:
    """Offspring of one steady-state generation (not yet evaluated).

    The ``num_parents`` fittest individuals breed ``population -
    num_parents`` children by single-point crossover of random parent
    pairs followed by mutation.
    """
    order = np.argsort(fit, kind="stable")
    parents = pop[order[: cfg.num_parents]]
    n_children = len(pop) - cfg.num_parents
    n = pop.shape[1]
    children = np.empty((n_children, n))
    for c in range(n_children):
        i, j = rng.choice(cfg.num_parents, size=2, replace=False)
        point = int(rng.integers(1, n)) if n > 1 else 0
        child = single_point_crossover(parents[i], parents[j], point)
        children[c] = mutate(child, cfg.mutation_rate, rng)
    return children


def replace_worst(pop, fit, children, child_fit):
    """Children take the slots of the worst individuals."""
    order = np.argsort(fit, kind="stable")
    worst = order[len(pop) - len(children):]
    pop = pop.copy()
    fit = fit.copy()
    pop[worst] = children
    fit[worst] = child_fit
    return pop, fit


def genetic(obj: Objective, cfg: GeneticConfig = GeneticConfig(), rng=None, initial=None) -> OptimizerResult:
    rng = np.random.default_rng(rng)
    pop = rng.uniform(0.0, 1.0, (cfg.population, obj.dim)) if initial is None else np.array(initial, dtype=float)
    fit = obj.evaluate_batch(pop)
    trace = Trace()
    best_i = int(np.argmin(fit))
    best_x, best_loss = pop[best_i].copy(), float(fit[best_i])
    trace.update(best_loss)
    trace.record(0, obj.eval_count)
    for it in range(1, cfg.iters + 1):
        children = ga_step(pop, fit, cfg, rng)
        child_fit = obj.evaluate_batch(children)
        k = int(np.argmin(child_fit))
        if child_fit[k] < best_loss:
            best_x, best_loss = children[k].copy(), float(child_fit[k])
        pop, fit = replace_worst(pop, fit, children, child_fit)
        trace.update(best_loss)
        trace.record(it, obj.eval_count)
    return OptimizerResult(best_x, best_loss, obj.eval_count, trace.rows, "genetic_algorithm", info={"population": pop})


def de_mutant(best, b, c, F):
    return best + F * (b - c)


def binomial_crossover(target: np.ndarray, mutant: np.ndarray, cr: float, rng: np.random.Generator) -> np.ndarray:
    n = len(target)
    mask = rng.uniform(size=n) < cr
    mask[rng.integers(n)] = True
    return np.where(mask, mutant, target)


def differential_evolution(obj: Objective, cfg: DEConfig = DEConfig(), rng=None) -> OptimizerResult:
    """DE/best/1/bin with dithered F and immediate (per-trial) updating."""
    rng = np.random.default_rng(rng)
    pop = rng.uniform(0.0, 1.0, (cfg.population, obj.dim))
    fit = obj.evaluate_batch(pop)
    best = int(np.argmin(fit))
    trace = Trace()
    trace.update(fit[best])
    trace.record(0, obj.eval_count)
    for gen in range(1, cfg.generations + 1):
        F = rng.uniform(*cfg.f_range)
        for i in range(cfg.population):
            others = [k for k in range(cfg.population) if k != i]
            b, c = rng.choice(others, size=2, replace=False)
            mutant = de_mutant(pop[best], pop[b], pop[c], F)
            trial = np.clip(binomial_crossover(pop[i], mutant, cfg.cr, rng), 0.0, 1.0)
            f = obj.evaluate(trial)
            if f <= fit[i]:
                pop[i], fit[i] = trial, f
                if f < fit[best]:
                    best = i
        trace.update(fit[best])
        trace.record(gen, obj.eval_count)
    return OptimizerResult(pop[best].copy(), float(fit[best]), obj.eval_count, trace.rows, "differential_evolution")
