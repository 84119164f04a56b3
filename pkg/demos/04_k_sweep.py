"""
Choosing the number of prototypes
=================================

Sweep k on videos with five true phases. ``run_sweep`` is the same routine
behind ``otseg sweep`` and returns one row of mean metrics per grid point.
"""

# %%
from otseg import SynthSpec, generate, resolve_config
from otseg.cli import run_sweep
from otseg.dataset import Video

videos = [Video(b, gt) for b, _, gt in (generate(SynthSpec(seed=s)) for s in range(3))]
rows = run_sweep(videos, resolve_config({"k": 5}), ks=[3, 5, 7, 10])
print(f"{'k':>3} {'MoF':>6} {'frame F1':>9} {'seg F1@0.5':>11}")
for r in rows:
    print(f"{r['k']:>3} {r['mof']:>6.3f} {r['frame_f1']:>9.3f} {r['seg_f1_t50']:>11.3f}")

# %%
# Too few clusters merge phases. A couple of spare clusters can soak up
# frames of a phase that would otherwise be split, so frame F1 may stay
# close to its peak just above the true k, while segmental F1 drops quickly
# because the spare clusters fragment the timeline.
for metric in ("frame_f1", "seg_f1_t50"):
    print(f"best k by {metric}:", max(rows, key=lambda r: r[metric])["k"])
