"""Patch files, sound edits, parameter analysis and Gaussian generation.

Edits work in physical units and touch only the parameters they name.
Generation fits a Gaussian to fitted patches in physical units and draws
new patches from it, clamping out-of-range draws to the descriptor box.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .params import (
    ADSR_NAMES,
    INDEX,
    N_PARAMS,
    NAMES,
    Patch,
    clamp_physical,
    denormalize,
    descriptor,
    descriptor_table,
    normalize,
    validate_patch,
)

SCHEMA_VERSION = 1
VARIANCE_FLOOR = 1e-8
FEATURE_COLUMNS = ("label", "midi_f0", "duration_sec", "norm_f0", "norm_duration")
F0DUR = ("keyboard.midi_f0", "keyboard.duration")
EDITABLE_FIELDS = ("attack", "decay", "sustain", "release")


class PatchFileError(ValueError):
    """A patch or model file that cannot be loaded."""


# ---------------------------------------------------------------- persistence


def patch_to_dict(p: Patch, meta: Optional[dict] = None) -> dict:
    meta = meta or {}
    params = {}
    for d, u in zip(descriptor_table(), p.values):
        params[d.name] = {"normalized": float(u), "value": denormalize(float(u), d), "unit": d.unit}
    return {
        "schema_version": SCHEMA_VERSION,
        "label": p.label,
        "source": p.source,
        "target": meta.get("target"),
        "loss": None if meta.get("loss") is None else float(meta["loss"]),
        "parameters": params,
    }


def patch_from_dict(doc: dict) -> tuple[Patch, dict]:
    if not isinstance(doc, dict):
        raise PatchFileError("patch file must hold a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise PatchFileError(f"schema_version {version!r} not supported (expected {SCHEMA_VERSION})")
    params = doc.get("parameters")
    if not isinstance(params, dict):
        raise PatchFileError("missing 'parameters' object")
    missing = [n for n in NAMES if n not in params]
    unknown = sorted(set(params) - set(NAMES))
    if unknown:
        raise PatchFileError(f"unknown parameter names: {', '.join(unknown)}")
    if missing:
        raise PatchFileError(f"missing parameters: {', '.join(missing)}")

    values = np.empty(N_PARAMS)
    for i, name in enumerate(NAMES):
        entry = params[name]
        try:
            u = float(entry["normalized"])
        except (TypeError, KeyError, ValueError):
            raise PatchFileError(f"{name}: no numeric 'normalized' value") from None
        if not 0.0 <= u <= 1.0:
            raise PatchFileError(f"{name}: normalized value {u} outside [0, 1]")
        d = descriptor(name)
        if entry.get("value") is not None:
            v = float(entry["value"])
            tol = 1e-9 * max(1.0, abs(d.max - d.min))
            if abs(denormalize(u, d) - v) > tol:
                raise PatchFileError(f"{name}: value {v} inconsistent with normalized {u}")
        values[i] = u
    meta = {"target": doc.get("target"), "loss": doc.get("loss")}
    return Patch(values, doc.get("label"), doc.get("source")), meta


def save_patch(p: Patch, meta: Optional[dict], path) -> None:
    problems = validate_patch(p)
    if problems:
        raise ValueError("invalid patch: " + "; ".join(map(str, problems)))
    # json writes floats with repr, which round-trips exactly
    text = json.dumps(patch_to_dict(p, meta), indent=2)
    Path(path).write_text(text + "\n")


def load_patch(path) -> tuple[Patch, dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise PatchFileError(f"{path}: not JSON ({e})") from None
    try:
        return patch_from_dict(doc)
    except PatchFileError as e:
        raise PatchFileError(f"{path}: {e}") from None


def is_patch_file(path) -> bool:
    """Patch files are ``*.json`` other than manifests and model files."""
    name = Path(path).name
    return name.endswith(".json") and not name.endswith(("manifest.json", "model.json"))


def load_patch_dir(directory) -> list[Patch]:
    """Load every patch file in a directory, sorted by file name."""
    return [load_patch(f)[0] for f in sorted(Path(directory).iterdir()) if is_patch_file(f)]


# ---------------------------------------------------------------- edits


def _set_physical(p: Patch, name: str, v: float) -> Patch:
    d = descriptor(name)
    v = min(max(v, d.min), d.max)
    out = p.copy()
    i = INDEX[name]
    # keep the stored coordinate when the value does not move
    if v != denormalize(float(p.values[i]), d):
        out.values[i] = normalize(v, d)
    return out


def pitch_shift(p: Patch, semitones: float) -> Patch:
    return _set_physical(p, "keyboard.midi_f0", p["keyboard.midi_f0"] + semitones)


def denoise(p: Patch) -> Patch:
    out = p.copy()
    out.values[INDEX["mixer.noise_level"]] = 0.0
    return out


def scale_envelope(p: Patch, adsr_name: str, field: str, factor: float) -> Patch:
    """Multiply one ADSR time or level by ``factor``, clamped to its range."""
    if adsr_name not in ADSR_NAMES:
        raise KeyError(f"unknown ADSR {adsr_name!r}; choose from {', '.join(ADSR_NAMES)}")
    if field not in EDITABLE_FIELDS:
        raise KeyError(f"unknown envelope field {field!r}; choose from {', '.join(EDITABLE_FIELDS)}")
    if not factor >= 0:
        raise ValueError(f"factor must be >= 0, got {factor}")
    name = f"{adsr_name}.{field}"
    return _set_physical(p, name, p[name] * factor)


# ---------------------------------------------------------------- analysis


@dataclass
class FeatureRow:
    label: Optional[str]
    midi_f0: float
    duration_sec: float
    norm_f0: float
    norm_duration: float


def extract_features(patches: Sequence[Patch]) -> list[FeatureRow]:
    rows = []
    for p in patches:
        rows.append(
            FeatureRow(
                p.label,
                p["keyboard.midi_f0"],
                p["keyboard.duration"],
                float(p.values[INDEX["keyboard.midi_f0"]]),
                float(p.values[INDEX["keyboard.duration"]]),
            )
        )
    return rows


def write_features_csv(rows: Sequence[FeatureRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FEATURE_COLUMNS)
        for r in rows:
            w.writerow([r.label or "", repr(r.midi_f0), repr(r.duration_sec), repr(r.norm_f0), repr(r.norm_duration)])


# ---------------------------------------------------------------- generation


@dataclass
class GaussianPatchModel:
    dims: list
    mean: np.ndarray
    covariance: np.ndarray
    fit_count: int
    mode: str = "diagonal"
    label: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "mean": [float(x) for x in self.mean],
            "covariance": [[float(x) for x in row] for row in self.covariance],
            "fit_count": int(self.fit_count),
            "mode": self.mode,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianPatchModel":
        unknown = [n for n in d["dims"] if n not in INDEX]
        if unknown:
            raise PatchFileError(f"model names unknown parameters: {', '.join(unknown)}")
        return cls(list(d["dims"]), np.array(d["mean"], dtype=float), np.array(d["covariance"], dtype=float),
                   int(d["fit_count"]), d.get("mode", "diagonal"), d.get("label"))


def save_model(model: GaussianPatchModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


def load_model(path) -> GaussianPatchModel:
    return GaussianPatchModel.from_dict(json.loads(Path(path).read_text()))


def resolve_dims(dims) -> list:
    if dims is None or dims == "all":
        return list(NAMES)
    if dims == "f0dur":
        return list(F0DUR)
    dims = list(dims)
    unknown = [n for n in dims if n not in INDEX]
    if unknown:
        raise KeyError(f"unknown parameters: {', '.join(unknown)}")
    return dims


def _common_label(patches) -> Optional[str]:
    labels = {p.label for p in patches}
    return labels.pop() if len(labels) == 1 else None


def fit_gaussian(patches: Sequence[Patch], dims="all", mode: str = "diagonal") -> GaussianPatchModel:
    """Sample mean and unbiased (co)variance of physical values over ``dims``."""
    if len(patches) < 2:
        raise ValueError(f"need at least 2 patches to fit a Gaussian, got {len(patches)}")
    if mode not in ("diagonal", "full"):
        raise ValueError(f"mode must be 'diagonal' or 'full', got {mode!r}")
    names = resolve_dims(dims)
    idx = [INDEX[n] for n in names]
    X = np.stack([p.physical()[idx] for p in patches])
    mean = X.mean(axis=0)
    if mode == "diagonal":
        cov = np.diag(np.maximum(X.var(axis=0, ddof=1), VARIANCE_FLOOR))
    else:
        cov = np.atleast_2d(np.cov(X, rowvar=False, ddof=1))
        w, V = np.linalg.eigh(cov)
        if w.min() < 0:
            warnings.warn(
                f"covariance not positive semidefinite (min eigenvalue {w.min():.3g}); clipping at {VARIANCE_FLOOR}",
                RuntimeWarning,
                stacklevel=2,
            )
        if w.min() < VARIANCE_FLOOR:
            cov = (V * np.maximum(w, VARIANCE_FLOOR)) @ V.T
            cov = (cov + cov.T) / 2.0
    return GaussianPatchModel(names, mean, cov, len(patches), mode, _common_label(patches))


def draw(model: GaussianPatchModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` unclamped draws from the model, shape ``(n, len(dims))``."""
    z = rng.standard_normal((n, len(model.dims)))
    if model.mode == "diagonal":
        return model.mean + z * np.sqrt(np.diag(model.covariance))
    L = np.linalg.cholesky(model.covariance)
    return model.mean + z @ L.T


def sample_patches(model: GaussianPatchModel, base: Sequence[Patch], n: int, rng: np.random.Generator) -> list[Patch]:
    """Draw ``n`` patches; dims outside the model come from a random base patch."""
    if n < 1:
        raise ValueError("n must be >= 1")
    subset = len(model.dims) < N_PARAMS
    if subset and not base:
        raise ValueError("base patches are required when the model covers a subset of parameters")
    raw = clamp_physical(draw(model, n, rng), model.dims)
    picks = rng.integers(0, len(base), n) if subset else np.zeros(n, dtype=int)
    idx = [INDEX[name] for name in model.dims]
    descs = [descriptor(name) for name in model.dims]
    out = []
    for k in range(n):
        values = base[picks[k]].values.copy() if subset else np.empty(N_PARAMS)
        values[idx] = [normalize(float(v), d) for v, d in zip(raw[k], descs)]
        out.append(Patch(values, model.label, "sampled"))
    return out
