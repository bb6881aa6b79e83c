"""Mel-scaled multi-resolution STFT reconstruction loss.

For every resolution the magnitude STFT of both signals is projected onto
a 45-band mel filterbank, and the per-resolution loss is

    w_sc * ||T - P||_F / (||T||_F + eps)  +  w_mag * mean(|T - P|)

The total is the mean over resolutions.
"""

from __future__ import annotations

from dataclasses import dataclass
import threading
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
import scipy.fft
from numpy.lib.stride_tricks import sliding_window_view

EPS = 1e-12

DEFAULT_RESOLUTIONS = ((2048, 256, 1024), (1024, 128, 512), (512, 64, 256), (256, 32, 128))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LossConfig:
    """Loss settings.

    ``resolutions`` holds ``(fft_size, hop_size, window_size)`` triples.
    ``f_max=None`` means Nyquist.  Spectrograms are computed in ``dtype``
    (float32 by default, for speed); the loss reductions always run in
    float64.
    """

    resolutions: tuple = DEFAULT_RESOLUTIONS
    n_mels: int = 45
    f_min: float = 0.0
    f_max: Optional[float] = None
    w_sc: float = 1.0
    w_mag: float = 1.0
    dtype: str = "float32"

    def __post_init__(self):
        object.__setattr__(self, "resolutions", tuple(tuple(int(v) for v in r) for r in self.resolutions))
        for fft, hop, win in self.resolutions:
            if win > fft:
                raise ConfigError(f"window_size {win} > fft_size {fft}")
            if hop <= 0 or win <= 0:
                raise ConfigError("hop and window sizes must be positive")


@dataclass
class MelSpectrogram:
    matrix: np.ndarray  # n_mels x n_frames
    resolution: int = 0


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


@lru_cache(maxsize=None)
def hann(window_size: int, dtype: str = "float64") -> np.ndarray:
    """Periodic Hann window; sums to exactly ``window_size / 2``."""
    n = np.arange(window_size)
    w = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / window_size)
    w = w.astype(dtype)
    w.flags.writeable = False
    return w


def stft_magnitude(x, fft_size: int, hop_size: int, window_size: int, dtype="float64") -> np.ndarray:
    """Magnitude STFT, shape ``(fft_size // 2 + 1, n_frames)``.

    Frames are centred: the signal is zero-padded by ``window_size // 2``
    on both sides, so ``n_frames = len(x) // hop_size + 1``.  Each frame is
    Hann-windowed and zero-padded to ``fft_size``.
    """
    if window_size > fft_size:
        raise ConfigError(f"window_size {window_size} > fft_size {fft_size}")
    x = np.asarray(getattr(x, "samples", x), dtype=dtype)
    if x.size == 0:
        raise ValueError("empty signal")
    pad = window_size // 2
    padded = np.pad(x, (pad, window_size - pad))
    n_frames = len(x) // hop_size + 1
    frames = sliding_window_view(padded, window_size)[: n_frames * hop_size : hop_size]
    buf = _frame_buffer(n_frames, fft_size, window_size, x.dtype.name)
    np.multiply(frames, hann(window_size, x.dtype.name), out=buf[:, :window_size])
    return np.abs(scipy.fft.rfft(buf, axis=1)).T


_buffers = threading.local()


def _frame_buffer(n_frames, fft_size, window_size, dtype):
    # Reused per thread: allocating a fresh multi-megabyte zero buffer on
    # every call costs more in page faults than the FFT itself.  Only the
    # first window_size columns are ever written, so the tail stays zero.
    cache = getattr(_buffers, "cache", None)
    if cache is None:
        cache = _buffers.cache = {}
    key = (n_frames, fft_size, window_size, dtype)
    buf = cache.get(key)
    if buf is None:
        if len(cache) > 32:
            cache.clear()
        buf = cache[key] = np.zeros((n_frames, fft_size), dtype=dtype)
    return buf


def _triangle_integral(a, b, lo, center, hi):
    """Integral over [a, b] of the unit-peak triangle on (lo, center, hi)."""

    def F(x):
        # antiderivative of the triangle, continuous and piecewise quadratic
        x = np.clip(x, lo, hi)
        left = np.where(x <= center, (x - lo) ** 2 / (2 * (center - lo)), (center - lo) / 2)
        right = np.where(
            x > center,
            (hi - center) / 2 - (hi - x) ** 2 / (2 * (hi - center)),
            0.0,
        )
        return left + right

    return F(b) - F(a)


@lru_cache(maxsize=None)
def mel_filterbank(n_mels: int, fft_size: int, sample_rate: int, f_min: float = 0.0, f_max: Optional[float] = None) -> np.ndarray:
    """Triangular HTK-mel filterbank, shape ``(n_mels, fft_size // 2 + 1)``.

    Each weight is the mean of the triangle over the frequency span
    covered by that FFT bin, rather than the triangle sampled at the bin
    centre.  Narrow low-frequency filters therefore never come out empty,
    even at small FFT sizes.  Filters are area-normalized (peak
    ``2 / (hi - lo)`` in 1/Hz, as in Slaney's convention) so that wide
    high-frequency bands do not dominate the loss.
    """
    if f_max is None:
        f_max = sample_rate / 2.0
    if not 0.0 <= f_min < f_max <= sample_rate / 2.0:
        raise ConfigError(f"invalid band edges f_min={f_min}, f_max={f_max}")
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    n_bins = fft_size // 2 + 1
    df = sample_rate / fft_size
    centers = np.arange(n_bins) * df
    a = np.maximum(centers - df / 2, 0.0)
    b = np.minimum(centers + df / 2, sample_rate / 2.0)
    fb = np.empty((n_mels, n_bins))
    for m in range(n_mels):
        lo, c, hi = edges[m], edges[m + 1], edges[m + 2]
        fb[m] = _triangle_integral(a, b, lo, c, hi) / (b - a) * (2.0 / (hi - lo))
    fb = np.maximum(fb, 0.0)
    fb.flags.writeable = False
    return fb


@lru_cache(maxsize=None)
def _filterbank_as(n_mels, fft_size, sample_rate, f_min, f_max, dtype):
    fb = mel_filterbank(n_mels, fft_size, sample_rate, f_min, f_max).astype(dtype)
    fb.flags.writeable = False
    return fb


def filter_centers(n_mels: int, sample_rate: int, f_min: float = 0.0, f_max: Optional[float] = None) -> np.ndarray:
    if f_max is None:
        f_max = sample_rate / 2.0
    return mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))[1:-1]


def mel_spectrograms(x, sample_rate: int, cfg: LossConfig = LossConfig()) -> list[np.ndarray]:
    """Mel magnitude spectrograms at every resolution of ``cfg``."""
    out = []
    for fft, hop, win in cfg.resolutions:
        fb = _filterbank_as(cfg.n_mels, fft, sample_rate, cfg.f_min, cfg.f_max, cfg.dtype)
        out.append(fb @ stft_magnitude(x, fft, hop, win, dtype=cfg.dtype))
    return out


def spectral_convergence(T, P) -> float:
    T = np.asarray(getattr(T, "matrix", T), dtype=float)
    P = np.asarray(getattr(P, "matrix", P), dtype=float)
    if T.shape != P.shape:
        raise ValueError(f"shape mismatch {T.shape} vs {P.shape}")
    return float(np.linalg.norm(T - P) / (np.linalg.norm(T) + EPS))


def mean_abs_error(T, P) -> float:
    T = np.asarray(T, dtype=float)
    P = np.asarray(P, dtype=float)
    if T.shape != P.shape:
        raise ValueError(f"shape mismatch {T.shape} vs {P.shape}")
    return float(np.mean(np.abs(T - P)))


def loss_from_mels(target_mels: Sequence[np.ndarray], pred_mels: Sequence[np.ndarray], cfg: LossConfig = LossConfig()) -> float:
    total = 0.0
    for T, P in zip(target_mels, pred_mels):
        T = T.astype(np.float64, copy=False)
        P = P.astype(np.float64, copy=False)
        r = 0.0
        if cfg.w_sc:
            r += cfg.w_sc * spectral_convergence(T, P)
        if cfg.w_mag:
            r += cfg.w_mag * mean_abs_error(T, P)
        total += r
    return total / len(target_mels)


def _unpack(x, sample_rate):
    if hasattr(x, "samples"):
        return np.asarray(x.samples), x.sample_rate
    return np.asarray(x), sample_rate


def multires_loss(target, pred, cfg: LossConfig = LossConfig(), sample_rate: int = 44100) -> float:
    """Multi-resolution mel-STFT loss between two equal-length signals."""
    t, sr_t = _unpack(target, sample_rate)
    p, sr_p = _unpack(pred, sample_rate)
    if len(t) != len(p):
        raise ValueError(f"length mismatch {len(t)} vs {len(p)}")
    if sr_t != sr_p:
        raise ValueError(f"sample rate mismatch {sr_t} vs {sr_p}")
    return loss_from_mels(mel_spectrograms(t, sr_t, cfg), mel_spectrograms(p, sr_p, cfg), cfg)


class MelLoss:
    """Loss against a fixed target with the target spectrograms cached."""

    def __init__(self, target, cfg: LossConfig = LossConfig(), sample_rate: int = 44100):
        self.target, self.sample_rate = _unpack(target, sample_rate)
        self.cfg = cfg
        self.target_mels = mel_spectrograms(self.target, self.sample_rate, cfg)

    def __call__(self, pred) -> float:
        p, sr = _unpack(pred, self.sample_rate)
        if len(p) != len(self.target):
            raise ValueError(f"length mismatch {len(self.target)} vs {len(p)}")
        if sr != self.sample_rate:
            raise ValueError(f"sample rate mismatch {self.sample_rate} vs {sr}")
        return loss_from_mels(self.target_mels, mel_spectrograms(p, sr, self.cfg), self.cfg)
