"""
Editing patches and generating new ones
=======================================

Fitted patches can be edited (pitch, noise, envelopes) and used to fit a
Gaussian model from which new sounds are sampled.
"""

# %%
import numpy as np

from synthmatch.params import random_patch
from synthmatch.patches import (
    denoise,
    draw,
    extract_features,
    fit_gaussian,
    pitch_shift,
    sample_patches,
    scale_envelope,
)

rng = np.random.default_rng(7)
patches = [random_patch(rng, label="bird") for _ in range(15)]

# %%
# Edits change one physical value and leave the rest alone.
p = patches[0]
print("f0", p["keyboard.midi_f0"], "->", pitch_shift(p, 7)["keyboard.midi_f0"])
print("noise", round(p["mixer.noise_level"], 3), "->", denoise(p)["mixer.noise_level"])
print("attack", round(p["adsr_1.attack"], 3), "->", round(scale_envelope(p, "adsr_1", "attack", 0.5)["adsr_1.attack"], 3))

# %%
# Pitch and duration features of the collection.
for row in extract_features(patches)[:5]:
    print(f"{row.label} f0 {row.midi_f0:6.2f}  dur {row.duration_sec:.2f} s")

# %%
# A diagonal Gaussian over all 78 physical values.  Pre-clamp draws track
# the fitted mean; sampled patches are clamped back into range.
model = fit_gaussian(patches)
z = draw(model, 10000, np.random.default_rng(0))
se = np.sqrt(np.diag(model.covariance) / 10000)
print("max |mean error| in standard errors:", np.max(np.abs(z.mean(0) - model.mean) / se).round(2))
new = sample_patches(model, patches, 5, np.random.default_rng(0))
print([round(q["keyboard.midi_f0"], 1) for q in new])

# %%
# Modelling only pitch and duration keeps every other value from a real patch.
small = fit_gaussian(patches, "f0dur")
print(small.dims, np.round(small.mean, 2))
