"""Forward capture model walkthrough.

Builds a resolution chart, forms its Fourier-plane field, scans a limited
circular aperture over it, and shows what each band-passed camera image
looks like.  Also prints the diffraction arithmetic that links the
physical geometry to the blur you see.

Run:  python demos/01_forward_model.py
Figures land in demos/output/.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ptychosim import (aperture_samples, capture, diffraction_calc,
                       forward_transform, make_chart, plan_grid,
                       sensor_to_object)
from ptychosim.dataset import coverage_mosaic
from ptychosim.experiments import desk_chart_spec, desk_geometry

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

geom = desk_geometry()
blur = diffraction_calc(geom)
samples = aperture_samples(geom)
print(f"geometry: {geom.wavelength * 1e9:.0f} nm light, "
      f"{geom.aperture_diameter * 1e3:.2f} mm aperture at {geom.object_distance:.0f} m")
print(f"object-plane diffraction blur: {blur.object_blur * 1e3:.2f} mm "
      f"= {blur.object_blur / geom.object_pixel:.1f} object pixels")
print(f"aperture spans {samples:.2f} Fourier samples -> quantized to "
      f"{np.rint(samples):.0f}")

chart = make_chart(desk_chart_spec())
grid = plan_grid(61.0, 5, float(np.rint(samples)), geom.grid_size)
print(f"planned 5x5 grid: step {grid.step} samples, "
      f"overlap {100 * grid.overlap_fraction:.1f}%, SAR {grid.sar:.2f}")

cset = capture(chart, grid)
print(f"captured {len(cset.images)} images, each {cset.grid_size} px square")

psi_hat = forward_transform(chart.field)
mosaic = coverage_mosaic(psi_hat, grid.apertures, geom.grid_size)

fig, axes = plt.subplots(1, 4, figsize=(16, 4.2))
axes[0].imshow(chart.intensity(), cmap="gray")
axes[0].set_title("ground truth intensity")
axes[1].imshow(np.log1p(np.abs(psi_hat.data)), cmap="magma")
axes[1].set_title("Fourier magnitude (log)")
axes[2].imshow(mosaic, cmap="magma")
axes[2].set_title("scanned coverage mosaic")
center = sensor_to_object(cset.images[len(cset.images) // 2].astype(float))
axes[3].imshow(center, cmap="gray")
axes[3].set_title("center capture (band-passed)")
for ax in axes:
    ax.axis("off")
fig.tight_layout()
path = os.path.join(OUT, "01_forward_model.png")
fig.savefig(path, dpi=120)
print(f"wrote {path}")
