"""
Rendering patches and measuring how far apart they sound
========================================================

A patch is a point in the 78-dimensional unit cube.  This walk-through
renders a few, looks at the control signals behind them, and checks how
the multi-resolution mel loss reacts to small and large changes.
"""

# %%
import numpy as np

from synthmatch.params import NAMES, denormalize_vector, neutral_patch, random_patch
from synthmatch.spectral import LossConfig, mel_spectrograms, multires_loss
from synthmatch.synth import render, render_components

rng = np.random.default_rng(0)
p = random_patch(rng)
print(len(NAMES), "parameters, first few:", NAMES[:4])
print("physical values:", np.round(denormalize_vector(p.values)[:4], 3))

# %%
# Render is deterministic: the noise source has its own fixed seed.
x = render(p).samples
print(x.shape, "peak", np.abs(x).max())
assert np.array_equal(x, render(p).samples)

# %%
# The envelopes stay inside [0, 1] and the LFOs inside [-1, 1].
ctrl = render_components(p)["controls"]
for name, env in ctrl["envelopes"].items():
    print(f"{name:18s} {env.samples.min():.3f} .. {env.samples.max():.3f}")
for name, lfo in ctrl["lfos"].items():
    print(f"{name:18s} {lfo.samples.min():.3f} .. {lfo.samples.max():.3f}")

# %%
# A plain 440 Hz tone: one sine VCO, a gate-shaped envelope, nothing else.
tone = neutral_patch().with_values({
    "keyboard.midi_f0": 69.0, "keyboard.duration": 2.0, "adsr_1.sustain": 1.0,
    "mod_matrix.adsr_1->vco1_amp": 1.0, "vco_1.tuning": 0.0, "mixer.vco_1_level": 1.0,
})
y = render(tone).samples
spec = np.abs(np.fft.rfft(y * np.hanning(len(y))))
print("spectral peak at", np.argmax(spec) * 44100 / len(y), "Hz")

# %%
# Mel spectrograms at the four resolutions the loss compares.
for (fft, hop, win), m in zip(LossConfig().resolutions, mel_spectrograms(x, 44100)):
    print(f"fft {fft:4d} hop {hop:3d} win {win:4d} -> {m.shape}")

# %%
# Loss is zero on identical audio, small for a detuned copy, and larger for
# an unrelated patch.
detuned = p.with_values({"keyboard.midi_f0": min(127.0, p["keyboard.midi_f0"] + 0.5)})
other = random_patch(rng)
print("identity ", multires_loss(x, x))
print("detuned  ", round(multires_loss(x, render(detuned).samples), 4))
print("unrelated", round(multires_loss(x, render(other).samples), 4))
print("silence  ", round(multires_loss(x, np.zeros_like(x)), 4))
