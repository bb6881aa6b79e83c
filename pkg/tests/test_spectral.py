import numpy as np
import pytest

from synthmatch.params import random_patch
from synthmatch.spectral import (
    DEFAULT_RESOLUTIONS,
    ConfigError,
    LossConfig,
    MelLoss,
    filter_centers,
    hann,
    hz_to_mel,
    mel_filterbank,
    mel_spectrograms,
    multires_loss,
    spectral_convergence,
    stft_magnitude,
)
from synthmatch.synth import render

SR = 44100


def test_defaults():
    cfg = LossConfig()
    assert cfg.resolutions == ((2048, 256, 1024), (1024, 128, 512), (512, 64, 256), (256, 32, 128))
    assert cfg.resolutions == DEFAULT_RESOLUTIONS
    assert cfg.n_mels == 45 and cfg.w_sc == 1 and cfg.w_mag == 1
    with pytest.raises(ConfigError):
        LossConfig(resolutions=((256, 64, 512),))


def test_mel_anchor():
    # 2595 * log10(1 + 1000 / 700) = 999.99
    assert abs(float(hz_to_mel(1000.0)) - 1000.0) < 0.1


def test_hann_sum():
    for w in (128, 1024):
        assert abs(hann(w).sum() - w / 2) < 1e-9


def test_stft_zero_and_frames():
    x = np.zeros(5000)
    S = stft_magnitude(x, 512, 64, 256)
    assert S.shape == (257, 5000 // 64 + 1)
    assert np.all(S == 0)


def test_stft_dc_of_constant():
    W = 1024
    S = stft_magnitude(np.ones(8192), 2048, 256, W)
    # a frame well inside the signal sees the whole window
    assert abs(S[0, 10] - W / 2) < 1e-6


def test_filterbank_well_formed():
    for fft, _, _ in DEFAULT_RESOLUTIONS:
        fb = mel_filterbank(45, fft, SR)
        assert fb.shape == (45, fft // 2 + 1)
        assert np.all(fb >= 0)
        assert np.all(fb.max(axis=1) > 0)
    assert np.all(np.diff(filter_centers(45, SR)) > 0)
    with pytest.raises(ConfigError):
        mel_filterbank(45, 512, SR, 0.0, 30000.0)


def test_filterbank_area_normalized():
    # each triangle integrates to one (sum of bin means times bin width)
    fb = mel_filterbank(45, 2048, SR)
    df = SR / 2048
    areas = fb.sum(axis=1) * df
    assert np.allclose(areas[5:], 1.0, atol=0.02)


def test_spectral_convergence_examples():
    T = np.random.default_rng(0).uniform(size=(45, 20))
    assert spectral_convergence(T, T) == 0
    assert spectral_convergence(T, np.zeros_like(T)) == pytest.approx(1.0)
    assert spectral_convergence(T, 2 * T) == pytest.approx(1.0)


@pytest.fixture(scope="module")
def pair():
    rng = np.random.default_rng(0)
    return render(random_patch(rng)).samples, render(random_patch(rng)).samples


def test_identity(pair):
    x, _ = pair
    assert multires_loss(x, x) <= 1e-9


def test_loss_against_silence(pair):
    x, _ = pair
    cfg = LossConfig()
    mags = mel_spectrograms(x, SR, cfg)
    expected = 1.0 + np.mean([m.astype(float).mean() for m in mags])
    assert multires_loss(x, np.zeros_like(x)) == pytest.approx(expected, rel=1e-9)


def test_nonnegative_and_permutation(pair):
    x, y = pair
    a = multires_loss(x, y)
    b = multires_loss(x, y, LossConfig(resolutions=DEFAULT_RESOLUTIONS[::-1]))
    assert a > 0
    assert a == pytest.approx(b, rel=1e-12)


def test_weight_linearity(pair):
    x, y = pair
    one = multires_loss(x, y, LossConfig(w_sc=0.0, w_mag=1.0))
    two = multires_loss(x, y, LossConfig(w_sc=0.0, w_mag=2.0))
    assert two == pytest.approx(2 * one, rel=1e-12)


def test_one_hop_shift_bounded(pair):
    # smoke property: shifting by one coarse hop (256 samples) costs less
    # than swapping in an unrelated patch, and stays below 1.0.  Noisy
    # patches reach about half the unrelated-pair loss, since the noise
    # realization moves relative to the frame grid.
    x, y = pair
    shifted = np.concatenate([np.zeros(256), x[:-256]])
    d = multires_loss(x, shifted)
    assert d < multires_loss(x, y)
    assert d < 1.0


def test_float64_matches_float32(pair):
    x, y = pair
    a = multires_loss(x, y, LossConfig(dtype="float64"))
    b = multires_loss(x, y)
    assert a == pytest.approx(b, rel=1e-4)


def test_mel_loss_cache_and_errors(pair):
    x, y = pair
    assert MelLoss(x)(y) == pytest.approx(multires_loss(x, y), rel=1e-12)
    with pytest.raises(ValueError):
        multires_loss(x, y[:-1])
