"""``synthmatch`` command line: fit, render, edit, benchmark, analyze, generate.

Exit codes are 0 on success, 1 for runtime and I/O failures and 2 for
usage errors.  Commands that produce files also write a JSON manifest
holding the exact argument vector, input hashes, configs and seeds.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .audio import WavError, load_target, write_wav
from .optim import METHODS, UnknownMethod, budget_config, config_from_dict, default_config, run_method, write_trace_csv
from .params import random_patch, table_hash, table_json
from .patches import (
    PatchFileError,
    denoise,
    extract_features,
    fit_gaussian,
    load_patch,
    load_patch_dir,
    pitch_shift,
    sample_patches,
    save_model,
    save_patch,
    scale_envelope,
    write_features_csv,
)
from .synth import RenderConfig, ValidationError, render

THREADS_ENV = "SYNTHMATCH_THREADS"
ACCURACY_NOTE = "accuracy is n/a: classifier-based evaluation is out of scope"
# methods from the original comparison that are not part of this package
UNAVAILABLE_METHODS = ("encoder",)
SYNTHETIC_STREAM = 1


class UsageError(Exception):
    """Bad flags or config; exit code 2."""


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(path, command: str, argv, inputs, outputs, started: float, **extra) -> None:
    doc = {
        "command": command,
        "argv": list(argv),
        "version": __version__,
        "descriptor_table_sha256": table_hash(),
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "wall_clock_seconds": round(time.time() - started, 3),
    }
    doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, default=str) + "\n")


def _manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".manifest.json")


def _method_config(name: str, config_arg, scale, max_evals):
    if name not in METHODS:
        raise UsageError(str(UnknownMethod(name)))
    try:
        if config_arg:
            text = Path(config_arg).read_text() if Path(config_arg).is_file() else config_arg
            cfg = config_from_dict(name, json.loads(text))
        elif max_evals:
            cfg = budget_config(name, max_evals)
        else:
            cfg = default_config(name)
        if scale is not None:
            cfg = cfg.scaled(scale)
    except (ValueError, TypeError) as e:
        raise UsageError(f"bad config for {name}: {e}") from None
    return cfg


def _parse_methods(text: str) -> list:
    if text == "all":
        return list(METHODS)
    names = [m.strip() for m in text.split(",") if m.strip()]
    for m in names:
        if m not in METHODS:
            raise UsageError(str(UnknownMethod(m)))
    return names


# ---------------------------------------------------------------- commands


def cmd_fit(args, argv) -> int:
    started = time.time()
    cfg = _method_config(args.method, args.config, args.scale, args.max_evals)
    target = load_target(args.input, normalize=args.normalize)
    result = run_method(args.method, target, cfg, seed=args.seed, workers=args.threads)
    patch = result.to_patch(label=args.label)
    save_patch(patch, {"target": Path(args.input).name, "loss": result.best_loss}, args.out)
    outputs = [args.out]
    if args.trace:
        write_trace_csv(result, args.trace)
        outputs.append(args.trace)
    _write_manifest(
        _manifest_path(args.out), "fit", argv, [args.input], outputs, started,
        method=args.method, config=cfg.to_dict(), seed=args.seed,
        evaluations=result.evaluations, loss=result.best_loss,
    )
    print(f"{args.method}: loss {result.best_loss:.6f} after {result.evaluations} evaluations -> {args.out}")
    return 0


def cmd_render(args, argv) -> int:
    started = time.time()
    patch, _ = load_patch(args.patch)
    audio = render(patch, RenderConfig(noise_seed=args.noise_seed))
    write_wav(args.out, audio.samples, audio.sample_rate, args.format)
    _write_manifest(_manifest_path(args.out), "render", argv, [args.patch], [args.out], started, noise_seed=args.noise_seed)
    return 0


class _EditAction(argparse.Action):
    """Collect edit flags into one list so they apply in command-line order."""

    def __call__(self, parser, namespace, values, option_string=None):
        edits = list(getattr(namespace, "edits", None) or [])
        edits.append((self.const, values))
        namespace.edits = edits


def _parse_scale_env(spec: str):
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError(f"--scale-env expects adsr:field:factor, got {spec!r}")
    try:
        factor = float(parts[2])
    except ValueError:
        raise UsageError(f"--scale-env factor {parts[2]!r} is not a number") from None
    return parts[0], parts[1], factor


def cmd_edit(args, argv) -> int:
    started = time.time()
    if not args.edits:
        raise UsageError("edit needs at least one of --pitch-shift, --denoise, --scale-env")
    patch, meta = load_patch(args.patch)
    for kind, value in args.edits:
        if kind == "pitch":
            patch = pitch_shift(patch, value)
        elif kind == "denoise":
            patch = denoise(patch)
        else:
            adsr, field, factor = _parse_scale_env(value)
            try:
                patch = scale_envelope(patch, adsr, field, factor)
            except (KeyError, ValueError) as e:
                raise UsageError(str(e).strip("'\"")) from None
    save_patch(patch, meta, args.out)
    _write_manifest(_manifest_path(args.out), "edit", argv, [args.patch], [args.out], started, edits=args.edits)
    return 0


def _benchmark_targets(args):
    if args.synthetic is not None:
        if args.synthetic < 1:
            raise RuntimeError("--synthetic needs at least one target")
        # separate stream, so a method seeded with the same k does not start on the answer
        rng = np.random.default_rng([args.seed, SYNTHETIC_STREAM])
        return [(f"synthetic_{i:03d}", render(random_patch(rng)).samples) for i in range(args.synthetic)], []
    files = sorted(Path(args.dataset).glob("*.wav"))
    if not files:
        raise RuntimeError(f"no .wav files in {args.dataset}")
    return [(f.name, load_target(f, normalize=args.normalize)) for f in files], files


def cmd_benchmark(args, argv) -> int:
    started = time.time()
    methods = _parse_methods(args.methods)
    configs = {m: _method_config(m, None, args.scale, args.max_evals) for m in methods}
    targets, inputs = _benchmark_targets(args)
    rows = []
    for m in methods:
        for name, target in targets:
            t0 = time.perf_counter()
            r = run_method(m, target, configs[m], seed=args.seed, workers=args.threads)
            seconds = "" if args.no_timing else f"{time.perf_counter() - t0:.3f}"
            rows.append((m, name, r.best_loss, r.evaluations, seconds))
            print(f"{m:24s} {name:24s} loss {r.best_loss:.4f}", file=sys.stderr)
    order = {m: i for i, m in enumerate(METHODS)}
    rows.sort(key=lambda r: (order[r[0]], r[1]))
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "target", "loss", "evaluations", "seconds", "accuracy"])
        for m, name, loss, ev, sec in rows:
            w.writerow([m, name, repr(float(loss)), ev, sec, "n/a"])
        for m in methods:
            losses = [r[2] for r in rows if r[0] == m]
            evals = [r[3] for r in rows if r[0] == m]
            w.writerow([m, "MEAN", repr(float(np.mean(losses))), repr(float(np.mean(evals))), "", "n/a"])
    print(ACCURACY_NOTE, file=sys.stderr)
    print(f"not available here: {', '.join(UNAVAILABLE_METHODS)}", file=sys.stderr)
    _write_manifest(
        _manifest_path(args.out), "benchmark", argv, inputs, [args.out], started,
        methods=methods, configs={m: c.to_dict() for m, c in configs.items()}, seed=args.seed,
        evaluations=sum(r[3] for r in rows), note=ACCURACY_NOTE,
    )
    return 0


def cmd_analyze(args, argv) -> int:
    started = time.time()
    d = Path(args.patches)
    if not d.is_dir():
        raise FileNotFoundError(f"{d} is not a directory")
    patches = load_patch_dir(d)
    if not patches:
        raise RuntimeError(f"no patch files in {d}")
    write_features_csv(extract_features(patches), args.out)
    _write_manifest(_manifest_path(args.out), "analyze", argv, [], [args.out], started, patch_count=len(patches))
    return 0


def cmd_generate(args, argv) -> int:
    started = time.time()
    patches = load_patch_dir(args.patches)
    if len(patches) < 2:
        raise RuntimeError(f"need at least 2 patches in {args.patches}, found {len(patches)}")
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    model = fit_gaussian(patches, args.dims, args.mode)
    rng = np.random.default_rng(args.seed)
    samples = sample_patches(model, patches, args.n, rng)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    width = max(3, len(str(args.n - 1)))
    for k, p in enumerate(samples):
        stem = out / f"sample_{k:0{width}d}"
        save_patch(p, None, stem.with_suffix(".json"))
        write_wav(stem.with_suffix(".wav"), render(p).samples, 44100, args.format)
        outputs += [stem.with_suffix(".json"), stem.with_suffix(".wav")]
    save_model(model, out / "gaussian.model.json")
    outputs.append(out / "gaussian.model.json")
    _write_manifest(
        out / "manifest.json", "generate", argv, [], outputs, started,
        seed=args.seed, n=args.n, dims=args.dims, mode=args.mode, fit_count=model.fit_count,
    )
    return 0


def cmd_params(args, argv) -> int:
    text = table_json() + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="synthmatch", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    threads = dict(type=int, default=None, help=f"worker threads (default ${THREADS_ENV} or 1)")
    methods = ", ".join(METHODS)

    f = sub.add_parser("fit", help="fit synthesizer parameters to a WAV file")
    f.add_argument("--input", required=True)
    f.add_argument("--method", required=True, help=methods)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", required=True)
    f.add_argument("--trace")
    f.add_argument("--config", help="JSON object or path to a JSON file")
    f.add_argument("--scale", type=float, help="multiply the budget fields of the config")
    f.add_argument("--max-evals", type=int, help="cut the default config to this many evaluations")
    f.add_argument("--label")
    f.add_argument("--normalize", action="store_true", help="peak-normalize the input")
    f.add_argument("--threads", **threads)
    f.set_defaults(func=cmd_fit)

    r = sub.add_parser("render", help="render a patch file to WAV")
    r.add_argument("--patch", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--noise-seed", type=int, default=0)
    r.add_argument("--format", choices=("pcm16", "pcm24", "float32"), default="pcm16")
    r.set_defaults(func=cmd_render)

    e = sub.add_parser("edit", help="pitch-shift, denoise or rescale envelopes of a patch")
    e.add_argument("--patch", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--pitch-shift", type=float, action=_EditAction, const="pitch", dest="edits", metavar="SEMITONES")
    e.add_argument("--denoise", nargs=0, action=_EditAction, const="denoise", dest="edits")
    e.add_argument("--scale-env", action=_EditAction, const="scale_env", dest="edits", metavar="ADSR:FIELD:FACTOR")
    e.set_defaults(func=cmd_edit, edits=None)

    b = sub.add_parser("benchmark", help="compare methods on a set of targets")
    src = b.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", help="directory of WAV files")
    src.add_argument("--synthetic", type=int, help="render N targets from random patches")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--methods", default="all", help=f"'all' or a comma list of: {methods}")
    b.add_argument("--out", required=True)
    b.add_argument("--max-evals", type=int, help="budget-match every method to this many evaluations")
    b.add_argument("--scale", type=float, help="multiply the budget fields of every config")
    b.add_argument("--no-timing", action="store_true", help="leave the seconds column empty")
    b.add_argument("--normalize", action="store_true")
    b.add_argument("--threads", **threads)
    b.set_defaults(func=cmd_benchmark)

    a = sub.add_parser("analyze", help="f0/duration features of a directory of patches")
    a.add_argument("--patches", required=True)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("generate", help="fit a Gaussian to patches and sample new sounds")
    g.add_argument("--patches", required=True)
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--dims", choices=("all", "f0dur"), default="all")
    g.add_argument("--mode", choices=("diagonal", "full"), default="diagonal")
    g.add_argument("--out-dir", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--format", choices=("pcm16", "pcm24", "float32"), default="pcm16")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("params", help="export the parameter descriptor table as JSON")
    t.add_argument("--out")
    t.set_defaults(func=cmd_params)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) is None:
        args.threads = default_threads()
    try:
        return args.func(args, argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"synthmatch {args.command}: error: {e}", file=sys.stderr)
        return 2
    except (OSError, WavError, PatchFileError, ValidationError, RuntimeError, ValueError) as e:
        print(f"synthmatch {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
