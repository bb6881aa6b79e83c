"""Nine optimizers for sound matching behind one calling convention.

Every method has the signature ``method(objective, config, rng)`` and
returns an `OptimizerResult`.  `run_method` builds the objective from a
target sound and dispatches by name.
"""

from __future__ import annotations

import json
from typing import Optional

import numpy as np

from ..spectral import LossConfig
from ..synth import RenderConfig
from .cmaes import CMAES, cma_es
from .core import (
    AdamConfig,
    BoxViolation,
    CMAESConfig,
    DEConfig,
    GeneticConfig,
    MethodConfig,
    MetropolisConfig,
    Objective,
    OptimizerResult,
    PGPEConfig,
    RandomSearchConfig,
    SynthObjective,
    TPEConfig,
    VariationalConfig,
    config_to_json,
    read_trace_csv,
    write_trace_csv,
)
from .evolutionary import differential_evolution, genetic
from .mcmc import metropolis
from .pgpe import pgpe_clipup
from .simple import adam_fd, random_search
from .parzen import tpe
from .variational import variational_beta

METHODS = {
    "random_search": (random_search, RandomSearchConfig),
    "adam_fd": (adam_fd, AdamConfig),
    "variational": (variational_beta, VariationalConfig),
    "genetic_algorithm": (genetic, GeneticConfig),
    "differential_evolution": (differential_evolution, DEConfig),
    "pgpe": (pgpe_clipup, PGPEConfig),
    "cma_es": (cma_es, CMAESConfig),
    "metropolis": (metropolis, MetropolisConfig),
    "tpe": (tpe, TPEConfig),
}

# methods that report their final state (iterate, centre, mean, or the best
# of the last batch) instead of the best evaluation seen
FINAL_ITERATE_METHODS = ("adam_fd", "variational", "pgpe", "cma_es")


class UnknownMethod(KeyError):
    def __str__(self):
        return f"unknown method {self.args[0]!r}; valid methods: {', '.join(METHODS)}"


def _lookup(name):
    try:
        return METHODS[name]
    except KeyError:
        raise UnknownMethod(name) from None


def default_config(name: str) -> MethodConfig:
    return _lookup(name)[1]()


def config_from_dict(name: str, d: Optional[dict]) -> MethodConfig:
    cls = _lookup(name)[1]
    return cls.from_dict(d or {})


def config_from_json(name: str, text: str) -> MethodConfig:
    return config_from_dict(name, json.loads(text))


def budget_config(name: str, max_evals: int, dim: int = 78) -> MethodConfig:
    """Default config with the loop count cut so a run makes <= ``max_evals`` evaluations."""
    cfg = default_config(name)
    if name == "random_search":
        return RandomSearchConfig(n=max_evals)
    if name == "adam_fd":
        return AdamConfig(iters=max(1, (max_evals - 1) // (2 * dim)))
    if name == "variational":
        return VariationalConfig(iters=max(1, max_evals // cfg.batch))
    if name == "genetic_algorithm":
        return GeneticConfig(iters=max(1, (max_evals - cfg.population) // (cfg.population - cfg.num_parents)))
    if name == "differential_evolution":
        return DEConfig(generations=max(1, max_evals // cfg.population - 1))
    if name == "pgpe":
        return PGPEConfig(generations=max(1, (max_evals - 1) // cfg.population))
    if name == "cma_es":
        return CMAESConfig(max_iters=max(1, (max_evals - 1) // cfg.lam(dim)))
    if name == "metropolis":
        return MetropolisConfig(samples=max(1, max_evals - 1))
    if name == "tpe":
        return TPEConfig(trials=max_evals)
    raise UnknownMethod(name)


def run_method(
    name: str,
    target,
    cfg: Optional[MethodConfig] = None,
    seed: int = 0,
    render_cfg: RenderConfig = RenderConfig(),
    loss_cfg: LossConfig = LossConfig(),
    workers: int = 1,
) -> OptimizerResult:
    """Fit synthesizer parameters to ``target`` with the named method."""
    fn, cls = _lookup(name)
    if cfg is None:
        cfg = cls()
    elif not isinstance(cfg, cls):
        raise TypeError(f"{name} expects {cls.__name__}, got {type(cfg).__name__}")
    obj = SynthObjective(target, render_cfg, loss_cfg, workers=workers)
    result = fn(obj, cfg, np.random.default_rng(seed))
    result.method = name
    result.seed = seed
    result.info["target_id"] = obj.target_id
    return result


__all__ = [
    "METHODS",
    "FINAL_ITERATE_METHODS",
    "UnknownMethod",
    "Objective",
    "SynthObjective",
    "OptimizerResult",
    "BoxViolation",
    "MethodConfig",
    "RandomSearchConfig",
    "AdamConfig",
    "VariationalConfig",
    "GeneticConfig",
    "DEConfig",
    "PGPEConfig",
    "CMAESConfig",
    "MetropolisConfig",
    "TPEConfig",
    "CMAES",
    "random_search",
    "adam_fd",
    "variational_beta",
    "genetic",
    "differential_evolution",
    "pgpe_clipup",
    "cma_es",
    "metropolis",
    "tpe",
    "run_method",
    "budget_config",
    "default_config",
    "config_from_dict",
    "config_from_json",
    "config_to_json",
    "write_trace_csv",
    "read_trace_csv",
]
