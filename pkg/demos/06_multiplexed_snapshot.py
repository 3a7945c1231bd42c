"""Single-snapshot capture with multiplexed illumination.

A 7x7 array of abutting camera apertures samples disjoint Fourier tiles;
a 7x7 array of mutually incoherent sources shifts extra copies of the
spectrum across them, so one exposure records summed intensities from
several shifted bands.  Sweeping the number of simultaneously active
sources (N_mux) and the number of distinct illumination patterns (T)
shows how the holes in Fourier coverage fill in and the aliasing
artifacts of the N_mux=1, T=1 snapshot disappear.

Run:  python demos/06_multiplexed_snapshot.py      (several minutes)
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ptychosim import (ReconConfig, capture_multiplexed, intensity_rmse,
                       make_chart, plan_grid, plan_source_offsets,
                       reconstruct)
from ptychosim.experiments import desk_chart_spec

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

N = 256
CAMERA_D = 26.0

chart = make_chart(desk_chart_spec())
truth = chart.intensity()
cameras = plan_grid(0.0, 7, CAMERA_D, N)
src_step = int(np.rint((1.0 - 0.66) * CAMERA_D))
sources = plan_source_offsets(7, src_step)
print(f"cameras: 7x7 abutting, diameter {CAMERA_D:g} samples; "
      f"sources: 7x7, step {src_step} samples "
      f"({100 * (1 - src_step / CAMERA_D):.1f}% effective overlap)")

configs = [(1, 1), (2, 1), (4, 1), (8, 1), (2, 3), (4, 3), (8, 3)]
results = {}
for n_mux, t in configs:
    cset = capture_multiplexed(chart, cameras, sources, num_patterns=t,
                               n_active=n_mux, seed=500 + 10 * n_mux + t)
    report = reconstruct(cset, ReconConfig(max_iters=150, mode="multiplexed",
                                           precision="single"))
    rec = report.recovered_image.intensity()
    results[(n_mux, t)] = (rec, intensity_rmse(rec, truth))
    print(f"N_mux={n_mux} T={t}: {len(cset.images):3d} images, "
          f"rmse {results[(n_mux, t)][1]:.4f}")

fig, axes = plt.subplots(2, 4, figsize=(16, 8))
axes[0, 0].imshow(truth, cmap="gray")
axes[0, 0].set_title("ground truth")
axes[0, 0].axis("off")
for (n_mux, t), ax in zip(configs, axes.flat[1:]):
    rec, rmse = results[(n_mux, t)]
    ax.imshow(rec, cmap="gray")
    ax.set_title(f"N_mux={n_mux}, T={t} (rmse {rmse:.3f})")
    ax.axis("off")
fig.tight_layout()
path = os.path.join(OUT, "06_multiplexed_snapshot.png")
fig.savefig(path, dpi=110)
print(f"wrote {path}")
