"""Metropolis sampler with a uniform prior and random-resample proposals."""

from __future__ import annotations

import math

import numpy as np

from .core import MetropolisConfig, Objective, OptimizerResult, SynthObjective, Trace


def acceptance_probability(delta_loglik: float) -> float:
    return 1.0 if delta_loglik >= 0 else math.exp(delta_loglik)


def metropolis_accept(delta_loglik: float, u: float) -> bool:
    """Accept when ``u < min(1, exp(delta))`` for a uniform draw ``u``."""
    return delta_loglik >= 0 or u < math.exp(delta_loglik)


def resample_proposal(x: np.ndarray, p: float, rng: np.random.Generator) -> np.ndarray:
    """Redraw each coordinate uniformly with probability ``p`` (symmetric)."""
    mask = rng.uniform(size=len(x)) < p
    out = x.copy()
    out[mask] = rng.uniform(0.0, 1.0, int(mask.sum()))
    return out


def gaussian_loglik(audio: np.ndarray, target: np.ndarray, sigma: float) -> float:
    r = audio - target
    return -float(r @ r) / (2.0 * sigma**2)


def metropolis(obj: Objective, cfg: MetropolisConfig = MetropolisConfig(), rng=None) -> OptimizerResult:
    """Sample the posterior; report the visited state with the lowest loss.

    With the default ``likelihood="loss"`` the reconstruction loss ``L``
    is turned into ``exp(-L / (2 sigma^2))``.  With ``"waveform"`` (needs a
    `SynthObjective`) the likelihood is Gaussian on the waveform residual.
    Rejected proposals are evaluated but never become the answer.
    """
    rng = np.random.default_rng(rng)
    waveform = cfg.likelihood == "waveform"
    if waveform and not isinstance(obj, SynthObjective):
        raise TypeError("waveform likelihood needs a SynthObjective")

    def score(x):
        if waveform:
            loss, audio = obj.evaluate_with_audio(x)
            return loss, gaussian_loglik(audio, obj.target, cfg.sigma)
        loss = obj.evaluate(x)
        return loss, -loss / (2.0 * cfg.sigma**2)

    x = rng.uniform(0.0, 1.0, obj.dim)
    loss, ll = score(x)
    best_x, best_loss = x.copy(), loss
    trace = Trace()
    trace.update(loss)
    trace.record(0, obj.eval_count)
    accepted = 0
    for step in range(1, cfg.samples + 1):
        prop = resample_proposal(x, cfg.p_resample, rng)
        p_loss, p_ll = score(prop)
        if metropolis_accept(p_ll - ll, rng.uniform()):
            x, loss, ll = prop, p_loss, p_ll
            accepted += 1
            if loss < best_loss:
                best_x, best_loss = x.copy(), loss
        trace.update(best_loss)
        trace.record(step, obj.eval_count)
    info = {"acceptance_rate": accepted / max(cfg.samples, 1)}
    return OptimizerResult(best_x, best_loss, obj.eval_count, trace.rows, "metropolis", info=info)
