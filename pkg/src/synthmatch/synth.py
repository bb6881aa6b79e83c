"""Deterministic renderer for the 78-parameter Voice architecture.

Signal flow::

    keyboard -> 6 ADSRs -> 2 LFOs -> modulation matrix -> VCO 1 (sine)
                                                        -> VCO 2 (square/saw)
                                                        -> noise
             -> VCAs -> mixer -> hard clip to [-1, 1]

Envelopes and LFOs run at a reduced control rate and are linearly
upsampled to audio rate before driving the oscillators and VCAs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .params import (
    ADSR_NAMES,
    INDEX,
    LFO_SHAPES,
    MOD_DESTINATIONS,
    MOD_SOURCES,
    Patch,
    denormalize_vector,
    validate_patch,
)

TWO_PI = 2.0 * np.pi


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class RenderConfig:
    sample_rate: int = 44100
    control_rate: int = 441
    buffer_seconds: float = 2.0
    noise_seed: int = 0

    def __post_init__(self):
        if self.sample_rate % self.control_rate:
            raise ValueError("sample_rate must be divisible by control_rate")
        if self.buffer_seconds <= 0:
            raise ValueError("buffer_seconds must be positive")

    @property
    def n_samples(self) -> int:
        return int(round(self.sample_rate * self.buffer_seconds))

    @property
    def factor(self) -> int:
        return self.sample_rate // self.control_rate

    @property
    def n_control(self) -> int:
        return -(-self.n_samples // self.factor)


@dataclass
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __len__(self):
        return len(self.samples)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.samples, dtype=dtype)


@dataclass
class ControlSignal:
    samples: np.ndarray
    rate: int

    def __len__(self):
        return len(self.samples)


def midi_to_hz(m: float) -> float:
    if not 0.0 <= m <= 127.0:
        raise ValueError(f"midi note {m} outside [0, 127]")
    return 440.0 * 2.0 ** ((m - 69.0) / 12.0)


def _frac(x):
    return x - np.floor(x)


def adsr_envelope(attack, decay, sustain, release, alpha, note_on, rate, n) -> ControlSignal:
    """Piecewise ADSR curve sampled at ``rate`` for ``n`` samples.

    Segments of zero length are skipped.  If the note ends before the
    decay has finished, the release starts from whatever level the
    envelope had reached.
    """
    t = np.arange(n) / rate

    def held(t):
        # attack/decay/sustain part, as if the key were never released
        out = np.full(t.shape, float(sustain))
        if decay > 0:
            tau = np.clip((t - attack) / decay, 0.0, 1.0)
            out = 1.0 - (1.0 - sustain) * tau**alpha
        if attack > 0:
            in_attack = t < attack
            out = np.where(in_attack, (np.clip(t, 0.0, None) / attack) ** alpha, out)
        return out

    env = held(t)
    level_off = float(held(np.array([note_on]))[0])
    after = t >= note_on
    if release > 0:
        tau = np.clip((t - note_on) / release, 0.0, 1.0)
        env = np.where(after, level_off * (1.0 - tau**alpha), env)
    else:
        env = np.where(after, 0.0, env)
    return ControlSignal(np.clip(env, 0.0, 1.0), rate)


def _lfo_waves(phase: np.ndarray) -> np.ndarray:
    p = _frac(phase / TWO_PI)
    s = np.sin(phase)
    return np.stack(
        [
            s,
            (2.0 / np.pi) * np.arcsin(np.clip(s, -1.0, 1.0)),
            2.0 * p - 1.0,
            1.0 - 2.0 * p,
            np.where(p < 0.5, 1.0, -1.0),
        ]
    )


def _phase(freq: np.ndarray, rate: float, initial_phase: float) -> np.ndarray:
    # exclusive cumulative sum, so the first sample sits at initial_phase
    cycles = np.concatenate(([0.0], np.cumsum(freq[:-1]) / rate))
    return initial_phase + TWO_PI * _frac(cycles)


def lfo_signal(frequency, mod_depth, initial_phase, shape_weights, rate_env, amp_env, rate, n) -> ControlSignal:
    rate_env = np.asarray(getattr(rate_env, "samples", rate_env), dtype=float)
    amp_env = np.asarray(getattr(amp_env, "samples", amp_env), dtype=float)
    if len(rate_env) != n or len(amp_env) != n:
        raise ValueError("envelopes must have length n")
    w = np.asarray(shape_weights, dtype=float)
    w = w / (w.sum() + 1e-8)
    f = np.clip(frequency + mod_depth * rate_env, 0.0, 20.0)
    phase = _phase(f, rate, initial_phase)
    out = amp_env * (w @ _lfo_waves(phase))
    return ControlSignal(np.clip(out, -1.0, 1.0), rate)


_PITCH_DST = np.array([d.endswith("pitch") for d in MOD_DESTINATIONS])


def mod_matrix_mix(weights, sources) -> list[ControlSignal]:
    """Route 4 modulation sources to 5 destinations.

    ``weights[i][j]`` scales source ``i`` into destination ``j``.  Pitch
    destinations are clamped to [-1, 1], amplitude destinations to [0, 1].
    """
    w = np.asarray(weights, dtype=float).reshape(len(MOD_SOURCES), len(MOD_DESTINATIONS))
    rate = sources[0].rate
    src = np.stack([np.asarray(s.samples, dtype=float) for s in sources])
    dst = w.T @ src
    lo = np.where(_PITCH_DST, -1.0, 0.0)[:, None]
    dst = np.clip(dst, lo, 1.0)
    return [ControlSignal(row, rate) for row in dst]


def upsample_control(c, factor) -> ControlSignal:
    """Linear interpolation by an integer factor; the last value is held."""
    if int(factor) != factor or factor < 1:
        raise ValueError(f"upsampling factor must be a positive integer, got {factor}")
    factor = int(factor)
    x = np.asarray(getattr(c, "samples", c), dtype=float)
    rate = getattr(c, "rate", 1) * factor
    step = np.diff(x, append=x[-1:])
    ramp = np.arange(factor) / factor
    return ControlSignal((x[:, None] + step[:, None] * ramp).ravel(), rate)


def vco_render(kind, f0, tuning, mod_depth, pitch_mod, initial_phase, shape=0.0, sample_rate=44100, n=None) -> AudioBuffer:
    """Oscillator driven by a (pre-upsampled) pitch modulation signal.

    Phase accumulates in float64; the waveshaping runs in float32, which
    is plenty for audio and roughly halves the cost.
    """
    pitch_mod = np.asarray(getattr(pitch_mod, "samples", pitch_mod), dtype=float)
    if n is None:
        n = len(pitch_mod)
    pitch_mod = np.broadcast_to(pitch_mod, (n,)) if pitch_mod.ndim == 0 else pitch_mod[:n]
    if f0 < 0:
        raise ValueError("f0 must be non-negative")
    f = f0 * np.exp2((tuning + mod_depth * pitch_mod) / 12.0)
    f = np.clip(f, 0.0, sample_rate / 2.0)
    cycles = np.empty(n)
    cycles[0] = 0.0
    np.cumsum(f[:-1], out=cycles[1:])
    cycles /= sample_rate
    cycles += initial_phase / TWO_PI
    pos = _frac(cycles).astype(np.float32)
    s = np.sin(np.float32(TWO_PI) * pos)
    if kind == "sine":
        out = s
    elif kind == "square_saw":
        out = np.float32(1.0 - shape) * np.tanh(np.float32(20.0) * s)
        out += np.float32(shape) * (2 * pos - 1)
    else:
        raise ValueError(f"unknown oscillator kind {kind!r}")
    return AudioBuffer(out, sample_rate)


@lru_cache(maxsize=8)
def white_noise(seed: int, n: int) -> np.ndarray:
    """Uniform noise on [-1, 1); cached per seed and read-only."""
    out = np.random.default_rng(seed).uniform(-1.0, 1.0, n).astype(np.float32)
    out.flags.writeable = False
    return out


def _get(v, name):
    return float(v[INDEX[name]])


def render_components(p: Patch, cfg: RenderConfig = RenderConfig()) -> dict:
    """Render the three mixer inputs separately (after their VCAs).

    Returns a dict with keys ``vco_1``, ``vco_2`` and ``noise`` holding
    audio-rate arrays, plus the control signals under ``controls``.  The
    mixer levels are not applied.
    """
    problems = validate_patch(p)
    if problems:
        raise ValidationError("invalid patch: " + "; ".join(map(str, problems)))
    v = denormalize_vector(p.values)
    sr, n, nc = cfg.sample_rate, cfg.n_samples, cfg.n_control
    cr = cfg.control_rate
    note_on = _get(v, "keyboard.duration")

    env = {}
    for name in ADSR_NAMES:
        a, d, s, r, alpha = (_get(v, f"{name}.{f}") for f in ("attack", "decay", "sustain", "release", "alpha"))
        env[name] = adsr_envelope(a, d, s, r, alpha, note_on, cr, nc)

    lfo = {}
    for name in ("lfo_1", "lfo_2"):
        lfo[name] = lfo_signal(
            _get(v, f"{name}.frequency"),
            _get(v, f"{name}.mod_depth"),
            _get(v, f"{name}.initial_phase"),
            [_get(v, f"{name}.{s}") for s in LFO_SHAPES],
            env[f"{name}_rate_adsr"],
            env[f"{name}_amp_adsr"],
            cr,
            nc,
        )

    weights = [[_get(v, f"mod_matrix.{s}->{d}") for d in MOD_DESTINATIONS] for s in MOD_SOURCES]
    sources = [env["adsr_1"], env["adsr_2"], lfo["lfo_1"], lfo["lfo_2"]]
    mixed = mod_matrix_mix(weights, sources)
    ctrl = {
        name: upsample_control(c, cfg.factor).samples[:n].astype(np.float32)
        for name, c in zip(MOD_DESTINATIONS, mixed)
    }

    f0 = midi_to_hz(_get(v, "keyboard.midi_f0"))
    vco_1 = vco_render(
        "sine", f0, _get(v, "vco_1.tuning"), _get(v, "vco_1.mod_depth"),
        ctrl["vco1_pitch"], _get(v, "vco_1.initial_phase"), sample_rate=sr, n=n,
    ).samples
    vco_2 = vco_render(
        "square_saw", f0, _get(v, "vco_2.tuning"), _get(v, "vco_2.mod_depth"),
        ctrl["vco2_pitch"], _get(v, "vco_2.initial_phase"), _get(v, "vco_2.shape"), sample_rate=sr, n=n,
    ).samples
    noise = white_noise(cfg.noise_seed, n)
    return {
        "vco_1": vco_1 * ctrl["vco1_amp"],
        "vco_2": vco_2 * ctrl["vco2_amp"],
        "noise": noise * ctrl["noise_amp"],
        "controls": {"envelopes": env, "lfos": lfo, "mixed": mixed},
    }


def mix(components: dict, levels) -> np.ndarray:
    """Pre-clip mixer sum of the three VCA outputs."""
    l1, l2, ln = levels
    return l1 * components["vco_1"] + l2 * components["vco_2"] + ln * components["noise"]


def mixer_levels(p: Patch) -> tuple[float, float, float]:
    v = denormalize_vector(p.values)
    return tuple(_get(v, f"mixer.{k}") for k in ("vco_1_level", "vco_2_level", "noise_level"))


def render(p: Patch, cfg: RenderConfig = RenderConfig()) -> AudioBuffer:
    """Render ``p`` to a mono buffer of ``cfg.n_samples`` samples in [-1, 1]."""
    comps = render_components(p, cfg)
    levels = mixer_levels(p)
    out = mix(comps, levels)
    return AudioBuffer(np.clip(out, -1.0, 1.0).astype(np.float64), cfg.sample_rate)
