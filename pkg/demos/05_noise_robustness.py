"""Noise robustness of the synthetic aperture.

Repeats the SAR sweep at sensor SNRs of 10, 20, and 30 dB.  Redundant
overlapped captures average the noise down: at every SNR the
reconstruction error falls as the synthetic aperture grows, and even the
10 dB inputs produce a clean chart at SAR ~ 5.6.

Run:  python demos/05_noise_robustness.py      (a few minutes)
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from ptychosim import (ReconConfig, add_noise, capture, intensity_rmse,
                       make_chart, plan_grid, reconstruct, sensor_to_object)
from ptychosim.experiments import desk_chart_spec

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

N = 256
D_SAMPLES = 13.0

chart = make_chart(desk_chart_spec())
truth = chart.intensity()

fig, ax = plt.subplots(figsize=(6, 4))
for snr in (10.0, 20.0, 30.0):
    center_cs = add_noise(capture(chart, plan_grid(0.0, 1, D_SAMPLES, N)),
                          snr, seed=int(snr) * 100 + 1)
    center = sensor_to_object(center_cs.images[0].astype(float))
    sars = [1.0]
    rmses = [intensity_rmse(center, truth)]
    for count in (3, 7, 9, 13):
        grid = plan_grid(61.0, count, D_SAMPLES, N)
        cset = add_noise(capture(chart, grid), snr,
                         seed=int(snr) * 100 + count)
        report = reconstruct(cset, ReconConfig(max_iters=150,
                                               precision="single"))
        sars.append(grid.sar)
        rmses.append(intensity_rmse(report.recovered_image.intensity(),
                                    truth))
    print(f"{snr:4.0f} dB:", " ".join(f"SAR {s:.2f}={r:.4f}"
                                      for s, r in zip(sars, rmses)))
    ax.plot(sars, rmses, "o-", label=f"{snr:.0f} dB")

ax.set_xlabel("synthetic aperture ratio")
ax.set_ylabel("intensity RMSE")
ax.set_title("error vs SAR at three sensor SNRs")
ax.legend()
fig.tight_layout()
path = os.path.join(OUT, "05_noise_robustness.png")
fig.savefig(path, dpi=120)
print(f"wrote {path}")
