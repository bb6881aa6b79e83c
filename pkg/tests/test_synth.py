import numpy as np
import pytest
from scipy.stats import chisquare

from synthmatch.params import INDEX, N_PARAMS, Patch, neutral_patch, random_patch
from synthmatch.synth import (
    RenderConfig,
    ValidationError,
    adsr_envelope,
    lfo_signal,
    midi_to_hz,
    mix,
    mixer_levels,
    mod_matrix_mix,
    ControlSignal,
    render,
    render_components,
    upsample_control,
    vco_render,
)

SR = 44100


def test_render_config_defaults():
    cfg = RenderConfig()
    assert cfg.n_samples == 88200
    assert cfg.factor == 100
    with pytest.raises(ValueError):
        RenderConfig(sample_rate=44100, control_rate=440)


def test_midi_to_hz():
    assert midi_to_hz(69) == 440.0
    assert midi_to_hz(81) == 880.0
    # 440 * 2 ** (0.5 / 12)
    assert abs(midi_to_hz(69.5) - 452.893) < 1e-3
    with pytest.raises(ValueError):
        midi_to_hz(128)


def test_adsr_examples():
    env = adsr_envelope(1.0, 0.5, 0.5, 1.0, 1.0, note_on=3.0, rate=100, n=500).samples
    assert env[0] == 0.0
    assert env[50] == pytest.approx(0.5)
    assert env[100] == pytest.approx(1.0)
    # decay halfway: 1 - 0.5 * 0.5
    assert env[125] == pytest.approx(0.75)
    assert env[200] == pytest.approx(0.5)
    # release halfway from sustain
    assert env[350] == pytest.approx(0.25)
    assert np.all(env[400:] == 0.0)


def test_adsr_release_from_attack():
    # note off in the middle of the attack: release starts from the reached level
    env = adsr_envelope(2.0, 0.0, 1.0, 1.0, 1.0, note_on=1.0, rate=100, n=300).samples
    assert env[100] == pytest.approx(0.5)
    assert env[150] == pytest.approx(0.25)


def test_adsr_zero_segments():
    env = adsr_envelope(0.0, 0.0, 0.3, 0.0, 2.0, note_on=1.0, rate=100, n=200).samples
    assert np.all(env[:100] == 0.3)
    assert np.all(env[100:] == 0.0)


def _zeros(n):
    return ControlSignal(np.zeros(n), 441)


def _ones(n):
    return ControlSignal(np.ones(n), 441)


def test_lfo_zero_weights_and_amp():
    n = 441
    assert np.all(lfo_signal(5, 0, 0, [0] * 5, _zeros(n), _ones(n), 441, n).samples == 0)
    assert np.all(lfo_signal(5, 0, 0, [1, 1, 0, 0, 0], _zeros(n), _zeros(n), 441, n).samples == 0)


def test_lfo_pure_sine():
    n = 441
    out = lfo_signal(5.0, 0.0, 0.0, [1, 0, 0, 0, 0], _zeros(n), _ones(n), 441, n).samples
    t = np.arange(n) / 441
    assert np.allclose(out, np.sin(2 * np.pi * 5.0 * t) / (1 + 1e-8), atol=1e-9)


def test_lfo_frequency_clamp():
    n = 441
    fast = lfo_signal(20.0, 20.0, 0.0, [1, 0, 0, 0, 0], _ones(n), _ones(n), 441, n).samples
    ref = lfo_signal(20.0, 0.0, 0.0, [1, 0, 0, 0, 0], _ones(n), _ones(n), 441, n).samples
    assert np.array_equal(fast, ref)


def test_mod_matrix():
    n = 10
    srcs = [ControlSignal(np.full(n, 0.8), 441) for _ in range(4)]
    out = mod_matrix_mix(np.zeros((4, 5)), srcs)
    assert len(out) == 5 and all(np.all(o.samples == 0) for o in out)
    w = np.zeros((4, 5))
    w[0, 1] = 1
    ramp = ControlSignal(np.linspace(0, 1, n), 441)
    out = mod_matrix_mix(w, [ramp] + srcs[1:])
    assert np.allclose(out[1].samples, ramp.samples)
    w = np.zeros((4, 5))
    w[0, 1] = w[1, 1] = 1
    assert np.all(mod_matrix_mix(w, srcs)[1].samples == 1.0)
    # pitch destinations clamp at -1
    neg = [ControlSignal(np.full(n, -0.8), 441)] * 4
    w = np.zeros((4, 5))
    w[2, 0] = w[3, 0] = 1
    assert np.all(mod_matrix_mix(w, neg)[0].samples == -1.0)


def test_upsample():
    assert np.allclose(upsample_control([0.0, 1.0], 2).samples, [0, 0.5, 1, 1])
    assert np.all(upsample_control(np.full(7, 0.3), 100).samples == 0.3)
    assert len(upsample_control(np.zeros(13), 100).samples) == 1300
    with pytest.raises(ValueError):
        upsample_control([0.0, 1.0], 2.5)


def _peak_hz(x, nfft=4096):
    spec = np.abs(np.fft.rfft(x[:nfft] * np.hanning(nfft)))
    return np.argmax(spec) * SR / nfft


def test_vco_sine_peak():
    x = vco_render("sine", 440.0, 0.0, 0.0, 0.0, 0.0, sample_rate=SR, n=8192).samples
    assert abs(_peak_hz(x) - 440.0) <= SR / 4096


def test_vco_octave():
    a = vco_render("sine", 220.0, 12.0, 0.0, 0.0, 0.0, sample_rate=SR, n=SR).samples
    b = vco_render("sine", 440.0, 0.0, 0.0, 0.0, 0.0, sample_rate=SR, n=SR).samples
    assert np.array_equal(a, b)


def test_vco_shape_endpoints():
    n = 2000
    sq = vco_render("square_saw", 300.0, 0, 0, 0.0, 0.3, shape=0.0, sample_rate=SR, n=n).samples
    saw = vco_render("square_saw", 300.0, 0, 0, 0.0, 0.3, shape=1.0, sample_rate=SR, n=n).samples
    assert not np.allclose(sq, saw)
    cycles = np.concatenate(([0.0], np.cumsum(np.full(n - 1, 300.0)) / SR)) + 0.3 / (2 * np.pi)
    pos = (cycles - np.floor(cycles)).astype(np.float32)
    assert np.array_equal(saw, 2 * pos - 1)


def _silent_but(**levels):
    v = np.zeros(N_PARAMS)
    for k, x in levels.items():
        v[INDEX[k]] = x
    return Patch(v)


def test_zero_mixer_is_silent():
    out = render(neutral_patch())
    assert len(out) == 88200 and np.all(out.samples == 0)
    p = random_patch(np.random.default_rng(1))
    for k in ("mixer.vco_1_level", "mixer.vco_2_level", "mixer.noise_level"):
        p.values[INDEX[k]] = 0.0
    assert np.all(render(p).samples == 0)


def test_render_deterministic():
    p = random_patch(np.random.default_rng(2))
    assert np.array_equal(render(p).samples, render(p).samples)


def test_render_rejects_invalid():
    with pytest.raises(ValidationError):
        render(Patch(np.full(N_PARAMS, 1.5)))


def test_noise_histogram_uniform():
    # constant-1 envelope (attack 0, sustain 1, note held past the buffer) routed to noise_amp
    p = _silent_but(**{
        "mixer.noise_level": 1.0,
        "keyboard.duration": 1.0,
        "adsr_1.sustain": 1.0,
        "mod_matrix.adsr_1->noise_amp": 1.0,
    })
    x = render(p).samples
    assert len(x) == 88200
    counts, _ = np.histogram(x, bins=20, range=(-1, 1))
    assert chisquare(counts).pvalue > 0.001


def test_mixer_linear_before_clip():
    p = random_patch(np.random.default_rng(4))
    comps = render_components(p)
    l1, l2, ln = mixer_levels(p)
    a = mix(comps, (0.3, 0, 0))
    b = mix(comps, (0.6, 0, 0))
    assert np.allclose(b, 2 * a, atol=1e-6)


def test_range_invariants_random_patches():
    rng = np.random.default_rng(5)
    for _ in range(50):
        c = render_components(random_patch(rng))["controls"]
        for e in c["envelopes"].values():
            assert e.samples.min() >= 0 and e.samples.max() <= 1
        for l in c["lfos"].values():
            assert l.samples.min() >= -1 and l.samples.max() <= 1
