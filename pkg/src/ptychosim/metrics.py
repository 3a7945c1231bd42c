"""Image-quality metrics: bar contrast, MTF20 resolvability, scale-fitted
intensity RMSE, and diffraction-blur calculators."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, InputError
from .field import OpticalGeometry

MTF_THRESHOLD = 0.2


@dataclass(frozen=True)
class ContrastRecord:
    """Contrast of one bar group."""

    width: int
    line_pairs_per_pixel: float
    contrast: float


def contrast(image: np.ndarray, white_mask: np.ndarray,
             black_mask: np.ndarray) -> float:
    """Bar contrast ``(mean(white) - mean(black)) / (mean(white) + mean(black))``.

    Returns 0 when both means vanish.  Masks must be non-empty and
    disjoint.
    """
    image = np.asarray(image, dtype=np.float64)
    white_mask = np.asarray(white_mask, dtype=bool)
    black_mask = np.asarray(black_mask, dtype=bool)
    if not white_mask.any() or not black_mask.any():
        raise InputError("contrast masks must be non-empty")
    if (white_mask & black_mask).any():
        raise InputError("white and black masks overlap")
    w = float(image[white_mask].mean())
    b = float(image[black_mask].mean())
    if w + b == 0.0:
        return 0.0
    return (w - b) / (w + b)


def group_contrasts(image: np.ndarray, groups: Sequence) -> list:
    """Contrast records for every chart group, coarsest first."""
    records = [ContrastRecord(g.width, g.line_pairs_per_pixel,
                              contrast(image, g.white_mask, g.black_mask))
               for g in groups]
    return sorted(records, key=lambda r: -r.width)


def mtf20_limit(records: Sequence, threshold: float = MTF_THRESHOLD) -> Optional[int]:
    """Finest resolvable bar width under the first-crossing MTF20 rule.

    ``records`` must be sorted by decreasing bar width.  The limit is the
    smallest width whose contrast meets the threshold with every coarser
    group also passing; coherent ringing can push contrast back up past
    the first failure, so the walk stops there.  Returns ``None`` when no
    group resolves.
    """
    widths = [r.width for r in records]
    if widths != sorted(widths, reverse=True):
        raise InputError("records must be sorted by decreasing bar width")
    limit = None
    for rec in records:
        if rec.contrast >= threshold:
            limit = rec.width
        else:
            break
    return limit


def brightness_fit(recovered: np.ndarray, truth: np.ndarray) -> float:
    """Least-squares scale ``alpha`` minimizing ``||alpha*rec - truth||``."""
    recovered = np.asarray(recovered, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if recovered.shape != truth.shape:
        raise InputError("image shapes differ")
    denom = float(np.sum(recovered * recovered))
    if denom == 0.0:
        return 0.0
    return float(np.sum(recovered * truth)) / denom


def intensity_rmse(recovered: np.ndarray, truth: np.ndarray) -> float:
    """RMSE between intensities after a scalar brightness fit.

    Phase retrieval leaves the global intensity scale undetermined, so the
    recovered image is first scaled by the least-squares ``alpha`` (see
    :func:`brightness_fit`); zero means the images are proportional.
    """
    recovered = np.asarray(recovered, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if recovered.shape != truth.shape:
        raise InputError("image shapes differ")
    alpha = brightness_fit(recovered, truth)
    return float(np.sqrt(np.mean((alpha * recovered - truth) ** 2)))


@dataclass(frozen=True)
class DiffractionBlur:
    """Diffraction blur scales in meters.

    ``object_blur`` is the object-plane spot ``lambda z / d``;
    ``rayleigh`` is the sensor-plane Rayleigh distance ``1.22 lambda f/d``
    and ``sensor_blur`` the full Airy spot diameter (twice that).
    """

    sensor_blur: float
    object_blur: float
    rayleigh: float


def diffraction_calc(geom: OpticalGeometry) -> DiffractionBlur:
    """Diffraction blur sizes implied by a capture geometry."""
    rayleigh = 1.22 * geom.wavelength * geom.focal_length / geom.aperture_diameter
    return DiffractionBlur(
        sensor_blur=2.0 * rayleigh,
        object_blur=geom.wavelength * geom.object_distance / geom.aperture_diameter,
        rayleigh=rayleigh,
    )


def write_metrics_csv(path, rows: Sequence) -> None:
    """Write ``(experiment_id, metric, group_width, value)`` rows.

    ``group_width`` may be empty for whole-image metrics; ``None`` values
    are written as ``unresolved``.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["experiment_id", "metric", "group_width", "value"])
        for exp_id, metric, width, value in rows:
            writer.writerow([
                exp_id, metric,
                "" if width is None else width,
                "unresolved" if value is None else repr(float(value)),
            ])
