"""Acceptance checks for the whole package, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (also collected into the
pytest terminal summary by conftest.py).  Wall-clock limits are part of
each criterion.  Run directly with ``python tests/test_acceptance.py``
to get the lines without pytest.
"""

import csv
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from synthmatch.audio import read_wav, write_wav
from synthmatch.cli import main
from synthmatch.optim import (
    CMAESConfig,
    DEConfig,
    GeneticConfig,
    METHODS,
    Objective,
    RandomSearchConfig,
    SynthObjective,
    cma_es,
    differential_evolution,
    genetic,
    run_method,
)
from synthmatch.optim.evolutionary import ga_step
from synthmatch.optim.mcmc import metropolis_accept
from synthmatch.optim.parzen import good_set_size
from synthmatch.optim.pgpe import ClipUp
from synthmatch.optim.simple import fd_gradient
from synthmatch.params import (
    N_PARAMS,
    descriptor_table,
    denormalize_vector,
    neutral_patch,
    normalize_vector,
    random_patch,
    validate_patch,
)
from synthmatch.patches import draw, load_model, load_patch, save_patch
from synthmatch.spectral import multires_loss
from synthmatch.synth import render, render_components

LINES = []


def _report(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def sphere(center):
    return lambda u: float(np.sum((u - center) ** 2))


def test_loss_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(20):
        x = render(random_patch(rng)).samples
        worst = max(worst, multires_loss(x, x))
    dt = time.perf_counter() - t0
    _report("loss identity", worst <= 1e-9 and dt < 10, f"max loss {worst:.3g} over 20 patches in {dt:.1f} s")


def test_determinism():
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as d:
        d = Path(d)
        wav = d / "target.wav"
        write_wav(wav, render(random_patch(np.random.default_rng(42))).samples, 44100, "float32")
        differ = []
        for m in METHODS:
            outs = []
            for k in range(2):
                out = d / f"{m}_{k}.json"
                rc = main(["fit", "--input", str(wav), "--method", m, "--seed", "3", "--scale", "0.1", "--out", str(out)])
                outs.append(out.read_bytes() if rc == 0 else None)
            if outs[0] is None or outs[0] != outs[1]:
                differ.append(m)
    dt = time.perf_counter() - t0
    _report("determinism", not differ and dt < 600, f"{9 - len(differ)}/9 methods byte-identical in {dt:.0f} s")


def test_optimizer_ordering():
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as d:
        out = Path(d) / "bench.csv"
        rc = main([
            "benchmark", "--synthetic", "10", "--seed", "0", "--no-timing", "--max-evals", "2000",
            "--methods", "random_search,genetic_algorithm,metropolis,adam_fd", "--out", str(out),
        ])
        assert rc == 0
        loss = {}
        for r in csv.DictReader(open(out)):
            if r["target"] != "MEAN":
                loss[r["method"], r["target"]] = float(r["loss"])
                assert int(r["evaluations"]) <= 2000
    dt = time.perf_counter() - t0
    targets = sorted({t for _, t in loss})
    ga = sum(loss["genetic_algorithm", t] <= loss["random_search", t] for t in targets)
    mh = sum(loss["metropolis", t] <= loss["random_search", t] for t in targets)
    ad = sum(loss["random_search", t] <= loss["adam_fd", t] for t in targets)
    med = {m: np.median([loss[m, t] for t in targets]) for m in ("genetic_algorithm", "metropolis", "random_search", "adam_fd")}
    detail = (f"GA<=RS {ga}/10, MH<=RS {mh}/10, RS<=Adam {ad}/10 in {dt / 60:.1f} min; medians "
              + ", ".join(f"{m} {v:.3f}" for m, v in med.items()))
    _report("optimizer ordering", min(ga, mh, ad) >= 7 and dt < 3600, detail)


def test_optimizer_oracles():
    t0 = time.perf_counter()
    fails = []

    target = np.random.default_rng(7).uniform(0.1, 0.9, 10)
    r = cma_es(Objective(sphere(target), dim=10), CMAESConfig(max_iters=200), np.random.default_rng(0))
    if not r.best_loss < 1e-6:
        fails.append(f"cma_es {r.best_loss:.2g}")

    r = differential_evolution(Objective(sphere(0.7), dim=10), DEConfig(), np.random.default_rng(0))
    best = [row[2] for row in r.trace]
    if any(b2 > b1 for b1, b2 in zip(best, best[1:])):
        fails.append("de monotone")

    pop = np.tile(np.random.default_rng(0).uniform(size=6), (20, 1))
    r = genetic(Objective(sphere(0.2), dim=6), GeneticConfig(iters=30, mutation_rate=0.0), np.random.default_rng(1), initial=pop)
    children = ga_step(pop, np.ones(20), GeneticConfig(mutation_rate=0.0), np.random.default_rng(2))
    if not (np.array_equal(r.info["population"], pop) and np.array_equal(children, pop[:16])):
        fails.append("ga fixed point")

    x = np.random.default_rng(3).uniform(0.05, 0.95, 78)
    g = fd_gradient(Objective(sphere(0.3), dim=78), x)
    exact = 2 * (x - 0.3)
    rel = np.linalg.norm(g - exact) / np.linalg.norm(exact)
    if not rel <= 1e-4:
        fails.append(f"fd gradient {rel:.2g}")

    opt = ClipUp(78, step_size=0.075, momentum=0.9, max_speed=0.15)
    rng = np.random.default_rng(0)
    top = 0.0
    for _ in range(500):
        opt.step(rng.normal(size=78) * rng.uniform(0, 10))
        top = max(top, float(np.linalg.norm(opt.velocity)))
    if top > 0.15 + 1e-12:
        fails.append(f"clipup speed {top}")

    u = np.random.default_rng(0).uniform(size=10000)
    rate = np.mean([metropolis_accept(-1.0, v) for v in u])
    if abs(rate - math.exp(-1)) > 0.02:
        fails.append(f"metropolis rate {rate:.4f}")

    bad = [n for n in range(4, 101) if good_set_size(n, 0.25) != math.ceil(0.25 * n)]
    if bad:
        fails.append(f"tpe good set {bad}")

    dt = time.perf_counter() - t0
    detail = f"{7 - len(fails)}/7 oracles hold in {dt:.1f} s" + (f" (failed: {', '.join(fails)})" if fails else "")
    _report("optimizer oracles", not fails and dt < 300, detail)


def test_synth_recovery():
    t0 = time.perf_counter()
    wins = []
    for t in range(10):
        target = render(random_patch(np.random.default_rng([t, 5]))).samples
        ga = genetic(SynthObjective(target), GeneticConfig(iters=100, population=20), np.random.default_rng(t))
        X = np.random.default_rng([t, 6]).uniform(0.0, 1.0, (1000, N_PARAMS))
        random_losses = SynthObjective(target).evaluate_batch(X)
        wins.append(ga.best_loss < np.percentile(random_losses, 5))
    dt = time.perf_counter() - t0
    _report("synthesizer recovery", sum(wins) >= 8 and dt < 1800,
            f"GA below random 5th percentile on {sum(wins)}/10 targets in {dt / 60:.1f} min")


def test_generation_contract():
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as d:
        d = Path(d)
        src = d / "patches"
        src.mkdir()
        rng = np.random.default_rng(1)
        for k in range(12):
            save_patch(random_patch(rng, label="dog"), None, src / f"dog_{k:02d}.json")
        out = d / "gen"
        assert main(["generate", "--patches", str(src), "--n", "100", "--out-dir", str(out)]) == 0
        jsons = sorted(out.glob("sample_*.json"))
        wavs = sorted(out.glob("sample_*.wav"))
        in_range = 0
        for f in jsons:
            p, _ = load_patch(f)
            phys = p.physical()
            in_range += validate_patch(p) == [] and all(dd.min <= v <= dd.max for dd, v in zip(descriptor_table(), phys))
        lengths = {len(read_wav(w)[0]) for w in wavs}
        model = load_model(out / "gaussian.model.json")
    # pre-clamp draws at the generate default seed
    z = draw(model, 10000, np.random.default_rng(0))
    se = np.sqrt(np.diag(model.covariance) / 10000)
    dev = np.abs(z.mean(axis=0) - model.mean) / se
    dt = time.perf_counter() - t0
    ok = len(jsons) == 100 and len(wavs) == 100 and in_range == 100 and lengths == {88200} and dev.max() <= 3
    _report("generation contract", ok,
            f"{len(jsons)} patches ({in_range} in range), {len(wavs)} WAVs, max |mean error| {dev.max():.2f} SE over {len(dev)} dims in {dt:.0f} s")


def test_dsp_checks():
    t0 = time.perf_counter()
    p = neutral_patch().with_values({
        "keyboard.midi_f0": 69.0, "keyboard.duration": 2.0, "adsr_1.attack": 0.0, "adsr_1.decay": 0.0,
        "adsr_1.sustain": 1.0, "mod_matrix.adsr_1->vco1_amp": 1.0, "vco_1.tuning": 0.0,
        "vco_1.mod_depth": 0.0, "mixer.vco_1_level": 1.0,
    })
    x = render(p).samples
    spec = np.abs(np.fft.rfft(x * np.hanning(len(x))))
    bin_hz = 44100 / len(x)
    peak = np.argmax(spec) * bin_hz

    rng = np.random.default_rng(0)
    broken = 0
    for _ in range(1000):
        c = render_components(random_patch(rng))["controls"]
        env = all(e.samples.min() >= 0 and e.samples.max() <= 1 for e in c["envelopes"].values())
        lfo = all(l.samples.min() >= -1 and l.samples.max() <= 1 for l in c["lfos"].values())
        broken += not (env and lfo)

    U = np.random.default_rng(1).uniform(size=(1000, N_PARAMS))
    U[0], U[1] = 0.0, 1.0
    err = max(float(np.max(np.abs(normalize_vector(denormalize_vector(u)) - u))) for u in U)
    dt = time.perf_counter() - t0
    ok = abs(peak - 440.0) <= bin_hz and broken == 0 and err <= 1e-9
    _report("DSP checks", ok,
            f"peak {peak:.2f} Hz (bin {bin_hz} Hz), {broken}/1000 patches break range invariants, round-trip err {err:.1e} ({dt:.0f} s)")


def test_performance():
    rng = np.random.default_rng(0)
    p = random_patch(rng)
    target = render(random_patch(rng)).samples
    render(p)
    t_render = min(_timed(lambda: render(p)) for _ in range(10))
    y = render(p).samples
    t_loss = min(_timed(lambda: multires_loss(target, y)) for _ in range(10))
    t0 = time.perf_counter()
    r = run_method("random_search", target, RandomSearchConfig(n=1000), seed=1)
    t_rs = time.perf_counter() - t0
    assert r.evaluations == 1000
    ok = t_render <= 0.050 and t_loss <= 0.030 and t_rs <= 90
    _report("performance", ok,
            f"render {1e3 * t_render:.1f} ms, loss {1e3 * t_loss:.1f} ms, 1000-eval random search {t_rs:.1f} s")


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


if __name__ == "__main__":
    tests = [v for k, v in list(globals().items()) if k.startswith("test_")]
    if len(sys.argv) > 1:
        tests = [t for t in tests if any(a in t.__name__ for a in sys.argv[1:])]
    failed = 0
    for t in tests:
        try:
            t()
        except AssertionError:
            failed += 1
    print(f"{len(tests) - failed}/{len(tests)} criteria pass")
    sys.exit(1 if failed else 0)
