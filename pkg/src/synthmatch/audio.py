"""WAV ingestion and emission, resampling and length fixing.

Only RIFF/WAVE is supported, with 16- or 24-bit PCM or 32-bit float
samples.  The codec is written out here (rather than via ``wave`` or
``scipy.io.wavfile``) so that 24-bit output, float input and the error
categories below all behave the same way.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

SAMPLE_RATE = 44100
TARGET_SECONDS = 2.0

_FORMATS = {
    # name: (format tag, bits per sample)
    "pcm16": (1, 16),
    "pcm24": (1, 24),
    "float32": (3, 32),
}
_EXTENSIBLE = 0xFFFE


class WavError(Exception):
    """Base class for WAV problems."""


class WavFormatError(WavError):
    """Not a RIFF/WAVE file, or a malformed one."""


class WavTruncatedError(WavError):
    """Header promises more data than the file holds."""


class WavUnsupportedError(WavError):
    """Valid WAV, but an encoding this module does not read."""


def _chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8 : pos + 8 + size]
        yield cid, size, body
        pos += 8 + size + (size & 1)


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a WAV file as mono float64 in [-1, 1] plus its sample rate.

    Multi-channel audio is averaged to mono.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    samples = None
    for cid, size, body in _chunks(data):
        if cid == b"fmt ":
            if len(body) < 16:
                raise WavTruncatedError(f"{path}: fmt chunk truncated")
            fmt = struct.unpack_from("<HHIIHH", body)
            if fmt[0] == _EXTENSIBLE and len(body) >= 26:
                tag = struct.unpack_from("<H", body, 24)[0]
                fmt = (tag,) + fmt[1:]
        elif cid == b"data":
            if fmt is None:
                raise WavFormatError(f"{path}: data chunk before fmt chunk")
            if len(body) < size:
                raise WavTruncatedError(f"{path}: data chunk holds {len(body)} of {size} bytes")
            samples = body
            break
    if fmt is None:
        raise WavFormatError(f"{path}: no fmt chunk")
    if samples is None:
        raise WavTruncatedError(f"{path}: no data chunk")

    tag, channels, rate, _, block_align, bits = fmt
    if channels < 1:
        raise WavFormatError(f"{path}: zero channels")
    if (tag, bits) == (1, 16):
        x = np.frombuffer(samples, dtype="<i2", count=len(samples) // 2).astype(np.float64) / 32768.0
    elif (tag, bits) == (1, 24):
        raw = np.frombuffer(samples, dtype=np.uint8, count=len(samples) // 3 * 3).reshape(-1, 3).astype(np.int32)
        ints = raw[:, 0] | (raw[:, 1] << 8) | (raw[:, 2] << 16)
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
        x = ints.astype(np.float64) / float(1 << 23)
    elif (tag, bits) == (3, 32):
        x = np.frombuffer(samples, dtype="<f4", count=len(samples) // 4).astype(np.float64)
        x = np.clip(np.nan_to_num(x), -1.0, 1.0)
    else:
        raise WavUnsupportedError(f"{path}: unsupported encoding (format tag {tag}, {bits} bits)")
    frames = len(x) // channels
    x = x[: frames * channels].reshape(frames, channels).mean(axis=1)
    return x, int(rate)


def write_wav(path, samples, sample_rate: int = SAMPLE_RATE, format: str = "pcm16") -> None:
    """Write mono ``samples`` (clipped to [-1, 1]) as a WAV file."""
    if format not in _FORMATS:
        raise ValueError(f"unknown format {format!r}; choose from {', '.join(_FORMATS)}")
    tag, bits = _FORMATS[format]
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    if format == "pcm16":
        payload = np.round(x * 32768.0).clip(-32768, 32767).astype("<i2").tobytes()
    elif format == "pcm24":
        ints = np.round(x * float(1 << 23)).clip(-(1 << 23), (1 << 23) - 1).astype(np.int32)
        payload = ints.astype("<i4").view(np.uint8).reshape(-1, 4)[:, :3].tobytes()
    else:
        payload = x.astype("<f4").tobytes()
    block = bits // 8
    fmt = struct.pack("<HHIIHH", tag, 1, int(sample_rate), int(sample_rate) * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        body += b"\x00"
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", len(body)) + body)


def resample(x, from_rate: int, to_rate: int) -> np.ndarray:
    """Polyphase windowed-sinc resampling to ``round(len * to / from)`` samples."""
    if from_rate <= 0 or to_rate <= 0:
        raise ValueError("sample rates must be positive")
    x = np.asarray(x, dtype=np.float64)
    if from_rate == to_rate:
        return x.copy()
    g = np.gcd(int(from_rate), int(to_rate))
    y = resample_poly(x, int(to_rate) // g, int(from_rate) // g)
    return fix_length(y, int(round(len(x) * to_rate / from_rate)))


def fix_length(x, n: int) -> np.ndarray:
    """Truncate or zero-pad the tail to exactly ``n`` samples."""
    if n <= 0:
        raise ValueError("target length must be positive")
    x = np.asarray(x, dtype=np.float64)
    if len(x) >= n:
        return x[:n].copy()
    return np.concatenate([x, np.zeros(n - len(x))])


def peak_normalize(x, peak: float = 1.0) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    m = np.max(np.abs(x)) if len(x) else 0.0
    return x if m == 0 else x * (peak / m)


def load_target(path, sample_rate: int = SAMPLE_RATE, seconds: float = TARGET_SECONDS, normalize: bool = False) -> np.ndarray:
    """Read any supported WAV and turn it into a fixed-length mono target."""
    x, rate = read_wav(path)
    x = resample(x, rate, sample_rate)
    x = fix_length(x, int(round(sample_rate * seconds)))
    return peak_normalize(x) if normalize else x
