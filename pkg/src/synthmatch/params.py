"""Parameter space of the Voice-style synthesizer.

Optimizers work on the unit hypercube ``[0, 1]^78``; physical units only
show up when a patch is rendered, analysed or used for generation.  Each
coordinate maps to its physical value through

    value = min + (max - min) * u ** curve

so time-like parameters (curve 2) spend more of the unit interval on short
durations and modulation-matrix weights (curve 0.5) on small weights.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

N_PARAMS = 78

ADSR_NAMES = (
    "adsr_1",
    "adsr_2",
    "lfo_1_rate_adsr",
    "lfo_1_amp_adsr",
    "lfo_2_rate_adsr",
    "lfo_2_amp_adsr",
)
ADSR_FIELDS = ("attack", "decay", "sustain", "release", "alpha")
LFO_NAMES = ("lfo_1", "lfo_2")
LFO_SHAPES = ("sin", "tri", "saw", "rsaw", "sqr")
MOD_SOURCES = ("adsr_1", "adsr_2", "lfo_1", "lfo_2")
MOD_DESTINATIONS = ("vco1_pitch", "vco1_amp", "vco2_pitch", "vco2_amp", "noise_amp")


class DomainError(ValueError):
    """A value lies outside the domain of a parameter mapping."""


@dataclass(frozen=True)
class ParameterDescriptor:
    name: str
    min: float
    max: float
    curve: float
    unit: str

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "min": self.min,
            "max": self.max,
            "curve": self.curve,
            "unit": self.unit,
        }


def _build_table() -> tuple[ParameterDescriptor, ...]:
    d = ParameterDescriptor
    rows = [
        d("keyboard.midi_f0", 0.0, 127.0, 1.0, "midi"),
        d("keyboard.duration", 0.01, 4.0, 0.5, "seconds"),
    ]
    for adsr in ADSR_NAMES:
        rows += [
            d(f"{adsr}.attack", 0.0, 2.0, 2.0, "seconds"),
            d(f"{adsr}.decay", 0.0, 2.0, 2.0, "seconds"),
            d(f"{adsr}.sustain", 0.0, 1.0, 1.0, "ratio"),
            d(f"{adsr}.release", 0.0, 5.0, 2.0, "seconds"),
            d(f"{adsr}.alpha", 0.1, 6.0, 1.0, "ratio"),
        ]
    for lfo in LFO_NAMES:
        rows += [
            d(f"{lfo}.frequency", 0.0, 20.0, 2.0, "hertz"),
            d(f"{lfo}.mod_depth", -10.0, 20.0, 1.0, "hertz"),
            d(f"{lfo}.initial_phase", -math.pi, math.pi, 1.0, "radians"),
        ]
        rows += [d(f"{lfo}.{shape}", 0.0, 1.0, 1.0, "ratio") for shape in LFO_SHAPES]
    for src in MOD_SOURCES:
        for dst in MOD_DESTINATIONS:
            rows.append(d(f"mod_matrix.{src}->{dst}", 0.0, 1.0, 0.5, "ratio"))
    for vco in ("vco_1", "vco_2"):
        rows += [
            d(f"{vco}.tuning", -24.0, 24.0, 1.0, "semitones"),
            d(f"{vco}.mod_depth", -96.0, 96.0, 1.0, "semitones"),
            d(f"{vco}.initial_phase", -math.pi, math.pi, 1.0, "radians"),
        ]
    rows.append(d("vco_2.shape", 0.0, 1.0, 1.0, "ratio"))
    rows += [
        d("mixer.vco_1_level", 0.0, 1.0, 1.0, "ratio"),
        d("mixer.vco_2_level", 0.0, 1.0, 1.0, "ratio"),
        d("mixer.noise_level", 0.0, 1.0, 1.0, "ratio"),
    ]
    return tuple(rows)


_TABLE = _build_table()
assert len(_TABLE) == N_PARAMS
NAMES: tuple[str, ...] = tuple(d.name for d in _TABLE)
INDEX: dict[str, int] = {name: i for i, name in enumerate(NAMES)}
_MINS = np.array([d.min for d in _TABLE])
_MAXS = np.array([d.max for d in _TABLE])
_CURVES = np.array([d.curve for d in _TABLE])


def descriptor_table() -> tuple[ParameterDescriptor, ...]:
    """The 78 descriptors in their fixed order."""
    return _TABLE


def descriptor(name: str) -> ParameterDescriptor:
    try:
        return _TABLE[INDEX[name]]
    except KeyError:
        raise KeyError(f"unknown parameter {name!r}") from None


def table_json() -> str:
    """Canonical JSON serialization of the descriptor table."""
    return json.dumps([d.to_dict() for d in _TABLE], indent=2)


def table_hash() -> str:
    return hashlib.sha256(table_json().encode()).hexdigest()


def denormalize(u: float, d: ParameterDescriptor) -> float:
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"{d.name}: normalized value {u} outside [0, 1]")
    return d.min + (d.max - d.min) * u**d.curve


def normalize(v: float, d: ParameterDescriptor) -> float:
    if not d.min <= v <= d.max:
        raise DomainError(f"{d.name}: value {v} outside [{d.min}, {d.max}]")
    return ((v - d.min) / (d.max - d.min)) ** (1.0 / d.curve)


def denormalize_vector(u: np.ndarray) -> np.ndarray:
    """Vectorized `denormalize` over a full (..., 78) array."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != N_PARAMS:
        raise DomainError(f"expected {N_PARAMS} values, got {u.shape[-1]}")
    if np.any(u < 0.0) or np.any(u > 1.0):
        raise DomainError("normalized values outside [0, 1]")
    return _MINS + (_MAXS - _MINS) * u**_CURVES


def normalize_vector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != N_PARAMS:
        raise DomainError(f"expected {N_PARAMS} values, got {v.shape[-1]}")
    if np.any(v < _MINS) or np.any(v > _MAXS):
        raise DomainError("physical values outside descriptor ranges")
    return ((v - _MINS) / (_MAXS - _MINS)) ** (1.0 / _CURVES)


def clamp_physical(v: np.ndarray, names=NAMES) -> np.ndarray:
    """Clamp physical values to the ranges of the named descriptors."""
    idx = [INDEX[n] for n in names]
    return np.clip(v, _MINS[idx], _MAXS[idx])


@dataclass
class Patch:
    """A point in normalized parameter space plus provenance."""

    values: np.ndarray
    label: Optional[str] = None
    source: Optional[str] = None

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)

    def __getitem__(self, name: str) -> float:
        """Physical value of the named parameter."""
        return denormalize(float(self.values[INDEX[name]]), descriptor(name))

    def physical(self) -> np.ndarray:
        return denormalize_vector(self.values)

    def with_values(self, physical_values: dict) -> "Patch":
        values = self.values.copy()
        for name, v in physical_values.items():
            values[INDEX[name]] = normalize(v, descriptor(name))
        return Patch(values, self.label, self.source)

    def copy(self) -> "Patch":
        return Patch(self.values.copy(), self.label, self.source)


@dataclass
class Violation:
    index: Optional[int]
    message: str

    def __str__(self):
        return self.message


def validate_patch(p: Patch) -> list[Violation]:
    """Return the list of problems with ``p``; empty means valid."""
    values = np.asarray(p.values, dtype=float).ravel()
    out = []
    if values.size != N_PARAMS:
        out.append(Violation(None, f"length {values.size} != {N_PARAMS}"))
    for i in np.flatnonzero(~((values >= 0.0) & (values <= 1.0))):
        name = NAMES[i] if i < N_PARAMS else "?"
        out.append(Violation(int(i), f"index {i} ({name}): {values[i]} outside [0, 1]"))
    return out


def random_patch(rng: np.random.Generator, label: Optional[str] = None) -> Patch:
    return Patch(rng.uniform(0.0, 1.0, N_PARAMS), label=label, source="random")


def neutral_patch() -> Patch:
    """A silent patch; handy starting point for hand-built sounds."""
    return Patch(np.zeros(N_PARAMS))
