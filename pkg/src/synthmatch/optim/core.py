"""Objective wrapper, result type and method configurations."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Optional

import numpy as np

from ..params import N_PARAMS, Patch
from ..spectral import LossConfig, MelLoss
from ..synth import AudioBuffer, RenderConfig, render


class BoxViolation(ValueError):
    """A candidate outside [0, 1]^n reached the objective."""


class Objective:
    """Counts and evaluates candidates of a box-constrained problem.

    ``fn`` maps a vector in ``[0, 1]^dim`` to a loss.  Batches are
    evaluated in candidate order; with ``workers > 1`` they run on a
    thread pool, but the results are still gathered in order so the
    outcome does not depend on the thread count.
    """

    def __init__(self, fn: Callable[[np.ndarray], float], dim: int = N_PARAMS, target_id: str = "", workers: int = 1):
        self.fn = fn
        self.dim = dim
        self.target_id = target_id
        self.workers = workers
        self.eval_count = 0
        self.best_loss = math.inf
        self.best_x: Optional[np.ndarray] = None

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected shape ({self.dim},), got {x.shape}")
        if not (np.all(x >= 0.0) and np.all(x <= 1.0)):
            raise BoxViolation(f"candidate outside [0, 1]^{self.dim}")
        return x

    def _note(self, x, loss):
        self.eval_count += 1
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_x = x.copy()

    def __call__(self, x) -> float:
        return self.evaluate(x)

    def evaluate(self, x) -> float:
        x = self._check(x)
        loss = float(self.fn(x))
        self._note(x, loss)
        return loss

    def evaluate_batch(self, X) -> np.ndarray:
        X = [self._check(x) for x in np.asarray(X, dtype=float)]
        if self.workers > 1 and len(X) > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                losses = list(pool.map(self.fn, X))
        else:
            losses = [self.fn(x) for x in X]
        for x, loss in zip(X, losses):
            self._note(x, float(loss))
        return np.array(losses, dtype=float)


class SynthObjective(Objective):
    """Render a patch and score it against a fixed target sound."""

    def __init__(self, target, render_cfg: RenderConfig = RenderConfig(), loss_cfg: LossConfig = LossConfig(), workers: int = 1):
        samples = np.asarray(getattr(target, "samples", target), dtype=float)
        if len(samples) != render_cfg.n_samples:
            raise ValueError(f"target has {len(samples)} samples, renderer produces {render_cfg.n_samples}")
        self.target = samples
        self.render_cfg = render_cfg
        self.loss = MelLoss(samples, loss_cfg, render_cfg.sample_rate)
        digest = hashlib.sha256(samples.astype("<f8").tobytes()).hexdigest()[:16]
        super().__init__(self._loss_of, N_PARAMS, target_id=digest, workers=workers)

    def render(self, x) -> np.ndarray:
        return render(Patch(x), self.render_cfg).samples

    def _loss_of(self, x) -> float:
        return self.loss(self.render(x))

    def evaluate_with_audio(self, x) -> tuple[float, np.ndarray]:
        """Evaluate and also hand back the rendered waveform (one evaluation)."""
        x = self._check(x)
        audio = self.render(x)
        loss = float(self.loss(audio))
        self._note(x, loss)
        return loss, audio


@dataclass
class OptimizerResult:
    """Outcome of one optimizer run.

    ``best`` is the solution the method reports (the argmin for most
    methods; the final iterate, centre or mean for Adam, PGPE and CMA-ES)
    and ``best_loss`` its loss.  ``trace`` holds ``(iteration,
    evaluations, best_so_far)`` tuples with a non-increasing last column.
    """

    best: np.ndarray
    best_loss: float
    evaluations: int
    trace: list = field(default_factory=list)
    method: str = ""
    seed: int = 0
    info: dict = field(default_factory=dict)

    def to_patch(self, label: Optional[str] = None) -> Patch:
        return Patch(self.best.copy(), label=label, source=self.method)


def write_trace_csv(result: OptimizerResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "evaluations", "best_loss"])
        for it, ev, loss in result.trace:
            w.writerow([it, ev, repr(float(loss))])


def read_trace_csv(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [(int(r["iteration"]), int(r["evaluations"]), float(r["best_loss"])) for r in rows]


class Trace:
    """Running best-so-far log shared by the optimizers."""

    def __init__(self):
        self.rows = []
        self.best = math.inf

    def update(self, loss: float) -> None:
        if loss < self.best:
            self.best = float(loss)

    def record(self, iteration: int, evaluations: int) -> None:
        self.rows.append((iteration, evaluations, self.best))


# -- configurations ---------------------------------------------------------


@dataclass(frozen=True)
class MethodConfig:
    # fields that set the evaluation budget, scaled by `scaled`
    BUDGET_FIELDS: ClassVar[tuple] = ()

    def scaled(self, factor: float):
        """Copy with every budget field multiplied by ``factor`` (min 1)."""
        changes = {f: max(1, int(round(getattr(self, f) * factor))) for f in self.BUDGET_FIELDS}
        return self._fix(dataclasses.replace(self, **changes))

    def _fix(self, cfg):
        return cfg

    def evaluations(self, dim: int = N_PARAMS) -> int:
        """Exact number of objective evaluations a full run makes."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ValueError(f"unknown {cls.__name__} fields: {', '.join(unknown)}")
        kw = dict(d)
        for k, v in kw.items():
            if isinstance(v, list):
                kw[k] = tuple(v)
        return cls(**kw)

    def validate(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name in self.BUDGET_FIELDS and v < 1:
                raise ValueError(f"{f.name} must be positive")
        return self

    def __post_init__(self):
        self.validate()


@dataclass(frozen=True)
class RandomSearchConfig(MethodConfig):
    BUDGET_FIELDS: ClassVar[tuple] = ("n",)
    n: int = 1000

    def evaluations(self, dim=N_PARAMS):
        return self.n


@dataclass(frozen=True)
class AdamConfig(MethodConfig):
    BUDGET_FIELDS: ClassVar[tuple] = ("iters",)
    iters: int = 200
    lr: float = 0.001
    fd_eps: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def evaluations(self, dim=N_PARAMS):
        return 2 * dim * self.iters + 1


@dataclass(frozen=True)
class VariationalConfig(MethodConfig):
    BUDGET_FIELDS: ClassVar[tuple] = ("iters", "batch")
    iters: int = 500
    lr: float = 0.001
    batch: int = 200

    def _fix(self, cfg):
        return dataclasses.replace(cfg, batch=max(cfg.batch, 2))

    def evaluations(self, dim=N_PARAMS):
        return self.iters * self.batch


@dataclass(frozen=True)
class GeneticConfig(MethodConfig):
    BUDGET_FIELDS: ClassVar[tuple] = ("iters",)
    iters: int = 100
    num_parents: int = 4
    population: int = 20
    mutation_rate: float = 0.1

    def validate(self):
        super().validate()
        if not self.population >= self.num_parents >= 2:
            raise ValueError("need population >= num_parents >= 2")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be in [0, 1]")
        return self

    def evaluations(self, dim=N_PARAMS):
        return self.population + self.iters * (self.population - self.num_parents)


@dataclass(frozen=True)
class DEConfig(MethodConfig):
    BUDGET_FIELDS: ClassVar[tuple] = ("generations",)
    generations: int = 20
    population: int = 10
    cr: float = 0.7
    f_range: tuple = (0.5, 1.0)

    def validate(self):
        super().validate()
        if self.population < 4:
            raise ValueError("differential evolution needs population >= 4")
        if not 0.0 <= self.cr <= 1.0:
            raise ValueError("cr must be in [0, 1]")
        return self

    def evaluations(self, dim=N_PARAMS):
        return self.population * (self.generations + 1)


@dataclass(frozen=True)
class PGPEConfig(MethodConfig):
    BUDGET_FIELDS: ClassVar[tuple] = ("generations", "population")
    generations: int = 100
    population: int = 100
    sigma_init: float = 0.1
    sigma_lr: float = 0.1
    sigma_max_change: float = 0.2
    center_lr: float = 0.075
    clipup_max_speed: float = 0.15
    clipup_momentum: float = 0.9

    def _fix(self, cfg):
        pop = max(2, cfg.population + cfg.population % 2)
        return dataclasses.replace(cfg, population=pop)

    def validate(self):
        super().validate()
        if self.population % 2:
            raise ValueError("PGPE population must be even")
        return self

    def evaluations(self, dim=N_PARAMS):
        return self.generations * self.population + 1


@dataclass(frozen=True)
class CMAESConfig(MethodConfig):
    BUDGET_FIELDS: ClassVar[tuple] = ("max_iters",)
    max_iters: int = 200
    sigma0: float = 0.25
    x0: float = 0.5
    popsize: Optional[int] = None
    tol_x: float = 1e-12

    def validate(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        return self

    def lam(self, dim=N_PARAMS) -> int:
        return self.popsize or 4 + int(math.floor(3 * math.log(dim)))

    def evaluations(self, dim=N_PARAMS):
        # upper bound; the tol_x stop can end a run early
        return self.max_iters * self.lam(dim) + 1


@dataclass(frozen=True)
class MetropolisConfig(MethodConfig):
    BUDGET_FIELDS: ClassVar[tuple] = ("samples",)
    samples: int = 10000
    sigma: float = 0.1
    p_resample: float = 0.1
    # "loss" scores proposals by exp(-L / (2 sigma^2)); the Gaussian waveform
    # likelihood accepts almost nothing for noisy or phase-shifted audio and
    # often ends behind plain random search, so it is opt-in
    likelihood: str = "loss"

    def validate(self):
        super().validate()
        if not 0.0 <= self.p_resample <= 1.0:
            raise ValueError("p_resample must be in [0, 1]")
        if self.likelihood not in ("waveform", "loss"):
            raise ValueError("likelihood must be 'waveform' or 'loss'")
        return self

    def evaluations(self, dim=N_PARAMS):
        return self.samples + 1


@dataclass(frozen=True)
class TPEConfig(MethodConfig):
    BUDGET_FIELDS: ClassVar[tuple] = ("trials",)
    trials: int = 1000
    startup: int = 10
    gamma: float = 0.25
    candidates: int = 24

    def validate(self):
        super().validate()
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        return self

    def evaluations(self, dim=N_PARAMS):
        return self.trials


def config_to_json(cfg: MethodConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
