"""Ground-truth complex objects: line-pair resolution charts and
amplitude objects built from grayscale images.

Illumination is a unit plane wave, so the emerging field equals the
object reflectivity.  Charts are amplitude-only; any object can be given
an i.i.d. uniform random phase to emulate a diffuse (speckled) surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
from PIL import Image

from .errors import DimensionError, InputError, LayoutError
from .field import OBJECT_PLANE, ComplexField

PHASE_FLAT = "flat"
PHASE_RANDOM = "random-uniform"

_MIN_BAR_LENGTH = 12


@dataclass(frozen=True)
class ResolutionChartSpec:
    """Layout parameters for a bar-target resolution chart.

    ``group_widths`` are bar widths in pixels, strictly decreasing.  Each
    group renders ``pairs_per_group`` white/black line pairs in every
    requested orientation; bars are ``bar_length_factor`` times their width
    long (at least 12 px).  Amplitudes are dimensionless in [0, 1].
    """

    grid_size: int
    group_widths: tuple
    pairs_per_group: int = 3
    bar_length_factor: int = 3
    padding: int = 8
    white: float = 1.0
    black: float = 0.0
    orientations: tuple = ("vertical", "horizontal")

    def __post_init__(self):
        widths = tuple(int(w) for w in self.group_widths)
        object.__setattr__(self, "group_widths", widths)
        if not widths:
            raise InputError("chart needs at least one group width")
        if any(w < 1 for w in widths):
            raise InputError("bar widths must be >= 1 pixel")
        if any(a <= b for a, b in zip(widths, widths[1:])):
            raise InputError("bar widths must be strictly decreasing")
        if not (0.0 <= self.black <= 1.0 and 0.0 <= self.white <= 1.0):
            raise InputError("amplitudes must lie in [0, 1]")
        if self.pairs_per_group < 1:
            raise InputError("pairs_per_group must be >= 1")
        if self.padding < 0:
            raise InputError("padding must be >= 0")
        bad = [o for o in self.orientations if o not in ("vertical", "horizontal")]
        if bad or not self.orientations:
            raise InputError(f"bad orientations: {self.orientations!r}")


@dataclass
class BarGroup:
    """Exported masks for one chart group (both orientations merged)."""

    width: int
    line_pairs_per_pixel: float
    white_mask: np.ndarray
    black_mask: np.ndarray


@dataclass
class ObjectField:
    """A ground-truth object: complex field plus provenance.

    ``groups`` is populated for charts and carries the per-group bar masks
    used by the contrast metrics.
    """

    field: ComplexField
    phase_model: str
    provenance: str
    groups: Optional[list] = dc_field(default=None)

    def amplitude(self) -> np.ndarray:
        return np.abs(self.field.data)

    def intensity(self) -> np.ndarray:
        return self.field.intensity()


def _stripe_tile(width, pairs, length, vertical):
    """Shape and stripe geometry of one bar tile; returns (h, w)."""
    across = 2 * pairs * width
    return (length, across) if vertical else (across, length)


def make_chart(spec: ResolutionChartSpec) -> ObjectField:
    """Render a resolution chart and export per-group bar masks.

    Tiles are flow-packed left to right, top to bottom, in decreasing
    width order, on a white canvas.  Raises ``LayoutError`` when the
    requested groups do not fit on the grid.
    """
    n = spec.grid_size
    pad = spec.padding
    canvas = np.full((n, n), float(spec.white))
    groups = []

    x, y, row_h = pad, pad, 0
    for w in spec.group_widths:
        length = max(spec.bar_length_factor * w, _MIN_BAR_LENGTH)
        length = min(length, n - 2 * pad)
        if length < 1:
            raise LayoutError("padding leaves no room for bars")
        white_mask = np.zeros((n, n), dtype=bool)
        black_mask = np.zeros((n, n), dtype=bool)
        for orientation in spec.orientations:
            th, tw = _stripe_tile(w, spec.pairs_per_group, length,
                                  orientation == "vertical")
            if x + tw > n - pad:
                x = pad
                y += row_h + pad
                row_h = 0
            if x + tw > n - pad or y + th > n - pad:
                raise LayoutError(
                    f"group of width {w} px does not fit on a {n}px grid")
            for s in range(2 * spec.pairs_per_group):
                value, mask = ((spec.white, white_mask) if s % 2 == 0
                               else (spec.black, black_mask))
                if orientation == "vertical":
                    sl = (slice(y, y + th), slice(x + s * w, x + (s + 1) * w))
                else:
                    sl = (slice(y + s * w, y + (s + 1) * w), slice(x, x + tw))
                canvas[sl] = value
                mask[sl] = True
            x += tw + pad
            row_h = max(row_h, th)
        groups.append(BarGroup(width=w, line_pairs_per_pixel=1.0 / (2 * w),
                               white_mask=white_mask, black_mask=black_mask))

    return ObjectField(
        field=ComplexField(canvas.astype(complex), OBJECT_PLANE),
        phase_model=PHASE_FLAT,
        provenance=f"chart:widths={','.join(map(str, spec.group_widths))}",
        groups=groups,
    )


def _normalize_pixels(pixels: np.ndarray) -> np.ndarray:
    arr = np.asarray(pixels)
    if arr.size == 0 or arr.ndim != 2:
        raise DimensionError(f"expected a non-empty 2D image, got shape {arr.shape}")
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError("object images must be square; crop before loading")
    if np.issubdtype(arr.dtype, np.integer):
        info = np.iinfo(arr.dtype)
        if arr.min() < 0:
            raise InputError("image pixels must be nonnegative")
        return arr.astype(float) / info.max
    arr = arr.astype(float)
    if arr.min() < 0 or arr.max() > 1.0:
        raise InputError("float images must already be scaled to [0, 1]")
    return arr


def make_object_from_image(pixels, phase_model: str = PHASE_FLAT,
                           seed: Optional[int] = None,
                           provenance: str = "image") -> ObjectField:
    """Build an object whose amplitude is a normalized grayscale image.

    Integer images are divided by their dtype maximum; float images must
    already lie in [0, 1].  ``phase_model`` is either ``"flat"`` (zero
    phase, exactly real field) or ``"random-uniform"`` (i.i.d. phase
    uniform on [0, 2pi) drawn from a generator seeded with ``seed``).
    """
    amp = _normalize_pixels(pixels)
    if phase_model == PHASE_FLAT:
        data = amp.astype(complex)
    elif phase_model == PHASE_RANDOM:
        rng = np.random.default_rng(seed)
        phase = 2.0 * np.pi * rng.random(amp.shape)
        data = amp * np.exp(1j * phase)
    else:
        raise InputError(f"unknown phase model {phase_model!r}")
    return ObjectField(field=ComplexField(data, OBJECT_PLANE),
                       phase_model=phase_model, provenance=provenance)


def load_grayscale(path) -> np.ndarray:
    """Load an 8/16-bit grayscale PNG or PGM as floats in [0, 1]."""
    with Image.open(path) as img:
        mode = img.mode
        if mode in ("I;16", "I;16L", "I;16B", "I"):
            arr = np.asarray(img, dtype=np.float64) / 65535.0
        elif mode == "L":
            arr = np.asarray(img, dtype=np.float64) / 255.0
        else:
            arr = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
    return np.clip(arr, 0.0, 1.0)
