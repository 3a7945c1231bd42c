"""Phase retrieval end to end.

Captures a 13x13 grid at 61% overlap with 30 dB sensor noise, runs the
alternating-minimization solver, and compares the recovered image with
the blurry center capture: per-group bar contrast, MTF20 limits, and the
convergence trace.

Run:  python demos/02_reconstruction.py      (about a minute)
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ptychosim import (ReconConfig, add_noise, capture, group_contrasts,
                       intensity_rmse, make_chart, mtf20_limit, plan_grid,
                       reconstruct, sensor_to_object)
from ptychosim.experiments import desk_chart_spec

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

N = 256
D_SAMPLES = 13.0

chart = make_chart(desk_chart_spec())
truth = chart.intensity()

grid = plan_grid(61.0, 13, D_SAMPLES, N)
print(f"13x13 apertures, step {grid.step}, SAR {grid.sar:.2f}")
cset = add_noise(capture(chart, grid), 30.0, seed=7)

center = sensor_to_object(cset.images[len(cset.images) // 2].astype(float))
center_records = group_contrasts(center, chart.groups)
print(f"center capture MTF20: {mtf20_limit(center_records)} px, "
      f"rmse {intensity_rmse(center, truth):.4f}")

report = reconstruct(cset, ReconConfig(max_iters=150, precision="single"))
recovered = report.recovered_image.intensity()
records = group_contrasts(recovered, chart.groups)
print(f"recovered MTF20: {mtf20_limit(records)} px, "
      f"rmse {intensity_rmse(recovered, truth):.4f}, "
      f"{report.iterations_run} iterations")

fig, axes = plt.subplots(1, 4, figsize=(17, 4.2))
axes[0].imshow(truth, cmap="gray"); axes[0].set_title("ground truth")
axes[1].imshow(center, cmap="gray"); axes[1].set_title("center capture")
axes[2].imshow(recovered, cmap="gray"); axes[2].set_title("reconstruction")
for ax in axes[:3]:
    ax.axis("off")
widths = [r.width for r in records]
axes[3].plot(widths, [r.contrast for r in center_records], "o--",
             label="center capture")
axes[3].plot(widths, [r.contrast for r in records], "s-", label="recovered")
axes[3].axhline(0.2, color="k", lw=0.8, ls=":")
axes[3].set_xlabel("bar width (px)")
axes[3].set_ylabel("contrast")
axes[3].invert_xaxis()
axes[3].legend()
axes[3].set_title("MTF20 comparison")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "02_reconstruction.png"), dpi=120)

fig2, ax = plt.subplots(figsize=(5, 3.5))
ax.semilogy(report.residual_history)
ax.set_xlabel("iteration")
ax.set_ylabel("relative change of Fourier estimate")
fig2.tight_layout()
fig2.savefig(os.path.join(OUT, "02_convergence.png"), dpi=120)
print(f"wrote figures to {OUT}")
