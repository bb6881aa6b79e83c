"""
Matching a target sound with black-box optimizers
=================================================

We render a target from a hidden patch, then ask several optimizers to
recover something that sounds like it.  Budgets are small so the script
finishes in a couple of minutes; the benchmark command runs the full
comparison.
"""

# %%
import numpy as np

from synthmatch.optim import FINAL_ITERATE_METHODS, METHODS, budget_config, run_method
from synthmatch.params import random_patch
from synthmatch.synth import render

hidden = random_patch(np.random.default_rng(123))
target = render(hidden).samples
budget = 300

# %%
# Each method gets the same number of loss evaluations.
results = {}
for name in METHODS:
    r = run_method(name, target, budget_config(name, budget), seed=0)
    results[name] = r
    tag = " (final state)" if name in FINAL_ITERATE_METHODS else ""
    print(f"{name:24s} loss {r.best_loss:.3f} after {r.evaluations:4d} evals{tag}")

# %%
# Best-so-far curves: the trace rows are (iteration, evaluations, best).
r = results["genetic_algorithm"]
for it, evals, best in r.trace[::4]:
    print(f"iter {it:3d}  evals {evals:4d}  best {best:.3f}")

# %%
# How far is the winner from the hidden patch in parameter space?  Many
# patches sound alike, so a low loss need not mean a small distance.
winner = min(results.values(), key=lambda r: r.best_loss)
dist = np.abs(winner.best - hidden.values)
print(winner.method, "mean |u - u*| =", dist.mean().round(3), "median", np.median(dist).round(3))
