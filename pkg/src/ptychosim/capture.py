"""Forward capture model: scan a limited circular aperture over the
Fourier plane (or illuminate through several at once) and record the
resulting band-passed intensity images.

Captured images are full grid-size intensity maps in sensor orientation
(point-reflected relative to the object, the usual double-transform
parity); :func:`sensor_to_object` flips them back.  Image stacks are
stored as float32, the exact dtype the dataset files use, so a persisted
and reloaded capture set is bit-identical to the in-memory one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, GeometryError, InputError
from .field import (ApertureSpec, OpticalGeometry, _centered_fft2,
                    aperture_patch, forward_transform, parity_flip)
from .scene import ObjectField


@dataclass(frozen=True)
class ApertureGrid:
    """A square lattice of circular apertures on the Fourier grid.

    ``step`` is the center-to-center spacing in Fourier samples after
    quantization; overlap and synthetic-aperture ratio (SAR) are reported
    from the quantized values.
    """

    rows: int
    cols: int
    step: int
    diameter: float
    grid_size: int
    apertures: tuple

    @property
    def overlap_fraction(self) -> float:
        return 1.0 - self.step / self.diameter

    @property
    def sar(self) -> float:
        """Synthetic aperture diameter over single-aperture diameter."""
        return (self.diameter + (self.rows - 1) * self.step) / self.diameter

    def __len__(self):
        return len(self.apertures)


def _lattice_offsets(count: int, step: int):
    return [(k - (count - 1) / 2.0) * step for k in range(count)]


def plan_grid(overlap_pct: float, count_per_side: int, diameter: float,
              grid_size: int) -> ApertureGrid:
    """Plan a centered square lattice of apertures.

    The step is ``round((1 - overlap/100) * diameter)`` Fourier samples.
    Raises ``GeometryError`` if the step quantizes to zero or any aperture
    extends beyond the Fourier grid.
    """
    if not 0.0 <= overlap_pct < 100.0:
        raise InputError("overlap_pct must be in [0, 100)")
    if count_per_side < 1:
        raise InputError("count_per_side must be >= 1")
    if diameter <= 0:
        raise GeometryError("aperture diameter must be positive")
    step = int(np.rint((1.0 - overlap_pct / 100.0) * diameter))
    if step < 1 and count_per_side > 1:
        raise GeometryError("aperture step quantized to zero samples")
    c = grid_size // 2
    offsets = _lattice_offsets(count_per_side, step)
    apertures = []
    for oy in offsets:
        for ox in offsets:
            ap = ApertureSpec((c + ox, c + oy), diameter)
            if not (ap.fits_inside(grid_size) or ap.covers_grid(grid_size)):
                raise GeometryError(
                    f"{count_per_side}x{count_per_side} grid with step {step} "
                    f"and diameter {diameter} exceeds the {grid_size}-sample "
                    "Fourier plane")
            apertures.append(ap)
    return ApertureGrid(rows=count_per_side, cols=count_per_side, step=step,
                        diameter=diameter, grid_size=grid_size,
                        apertures=tuple(apertures))


def count_for_sar(sar_target: float, overlap_pct: float, diameter: float) -> int:
    """Per-side aperture count whose realized SAR approximates a target.

    Uses the quantized step; reproduces the reference sweep counts (a 9x9
    grid at 0% overlap and a 41x41 grid at 77% overlap both target SAR 10
    for a 42-sample aperture).
    """
    if sar_target < 1.0:
        raise InputError("sar_target must be >= 1")
    step = int(np.rint((1.0 - overlap_pct / 100.0) * diameter))
    if step < 1:
        raise GeometryError("aperture step quantized to zero samples")
    count = int(np.rint(sar_target * diameter / step)) - 1
    return max(count, 1)


def plan_source_offsets(count_per_side: int, step: float):
    """Centered square lattice of illumination-source shifts (in samples)."""
    if count_per_side < 1:
        raise InputError("count_per_side must be >= 1")
    offsets = _lattice_offsets(count_per_side, step)
    return [(ox, oy) for oy in offsets for ox in offsets]


def random_patterns(n_sources: int, n_active: int, num_patterns: int,
                    seed: Optional[int]):
    """Draw ``num_patterns`` random sets of ``n_active`` distinct sources."""
    if not 1 <= n_active <= n_sources:
        raise InputError("n_active must be in [1, n_sources]")
    rng = np.random.default_rng(seed)
    return [tuple(sorted(rng.choice(n_sources, size=n_active, replace=False)))
            for _ in range(num_patterns)]


@dataclass
class CaptureSet:
    """A stack of nonnegative intensity images with their apertures.

    In sequential mode ``images[i]`` pairs with ``apertures[i]``.  In
    multiplexed mode ``multiplex_groups[g]`` lists the aperture indices
    whose intensities sum into ``images[g]``.
    """

    images: np.ndarray
    apertures: tuple
    geometry: Optional[OpticalGeometry] = None
    snr_db: Optional[float] = None
    seed: Optional[int] = None
    multiplex_groups: Optional[tuple] = None

    def __post_init__(self):
        images = np.asarray(self.images, dtype=np.float32)
        if images.ndim != 3 or images.shape[1] != images.shape[2]:
            raise DimensionError("images must be a (count, n, n) stack")
        self.images = images
        self.apertures = tuple(self.apertures)
        if self.multiplex_groups is None:
            if len(self.images) != len(self.apertures):
                raise InputError(
                    f"{len(self.images)} images for {len(self.apertures)} apertures")
        else:
            self.multiplex_groups = tuple(tuple(g) for g in self.multiplex_groups)
            if len(self.images) != len(self.multiplex_groups):
                raise InputError("one multiplex group per image required")
            flat = [i for g in self.multiplex_groups for i in g]
            if sorted(flat) != list(range(len(self.apertures))):
                raise InputError("multiplex groups must partition the aperture list")
        if np.any(self.images < 0):
            raise InputError("intensities must be nonnegative")

    @property
    def grid_size(self) -> int:
        return self.images.shape[1]

    @property
    def is_multiplexed(self) -> bool:
        return self.multiplex_groups is not None


def sensor_to_object(image: np.ndarray) -> np.ndarray:
    """Undo the double-transform parity so a capture aligns with the object."""
    return parity_flip(image)


def _band_intensity(psi_hat: np.ndarray, ap: ApertureSpec, buf: np.ndarray):
    sy, sx, local = aperture_patch(ap, psi_hat.shape[0])
    buf[sy, sx] = psi_hat[sy, sx] * local
    sensor = _centered_fft2(buf)
    buf[sy, sx] = 0.0
    return (sensor.real ** 2 + sensor.imag ** 2)


def capture(obj: ObjectField, grid: ApertureGrid) -> CaptureSet:
    """Record one noiseless intensity image per aperture.

    ``I_i = |F(mask_i * F(object))|^2`` with centered unitary transforms.
    """
    n = obj.field.grid_size
    if n != grid.grid_size:
        raise DimensionError(
            f"object grid {n} does not match aperture grid {grid.grid_size}")
    psi_hat = forward_transform(obj.field).data
    buf = np.zeros((n, n), dtype=np.complex128)
    images = np.empty((len(grid.apertures), n, n), dtype=np.float32)
    for i, ap in enumerate(grid.apertures):
        images[i] = _band_intensity(psi_hat, ap, buf)
    return CaptureSet(images=images, apertures=grid.apertures,
                      geometry=None, snr_db=None, seed=None)


def add_noise(capture_set: CaptureSet, snr_db: float,
              seed: Optional[int]) -> CaptureSet:
    """Add white Gaussian noise at a requested SNR, clamping negatives to 0.

    Per image, the noise variance is ``mean(I^2) * 10**(-snr_db/10)``
    (signal power taken as the mean squared intensity).  ``snr_db`` of
    ``+inf`` (or None) disables noise and returns the images unchanged.
    Identical seeds produce identical realizations.
    """
    if snr_db is None or math.isinf(snr_db):
        return CaptureSet(images=capture_set.images.copy(),
                          apertures=capture_set.apertures,
                          geometry=capture_set.geometry,
                          snr_db=None, seed=seed,
                          multiplex_groups=capture_set.multiplex_groups)
    if not math.isfinite(snr_db):
        raise InputError("snr_db must be finite or +inf")
    rng = np.random.default_rng(seed)
    noised = np.empty_like(capture_set.images)
    for i, img in enumerate(capture_set.images):
        img64 = img.astype(np.float64)
        sigma = math.sqrt(np.mean(img64 ** 2) * 10.0 ** (-snr_db / 10.0))
        out = img64 + sigma * rng.standard_normal(img64.shape)
        noised[i] = np.clip(out, 0.0, None)
    return CaptureSet(images=noised, apertures=capture_set.apertures,
                      geometry=capture_set.geometry, snr_db=snr_db, seed=seed,
                      multiplex_groups=capture_set.multiplex_groups)


def capture_multiplexed(obj: ObjectField, cameras: ApertureGrid,
                        source_offsets: Sequence, patterns=None,
                        num_patterns: Optional[int] = None,
                        n_active: Optional[int] = None,
                        seed: Optional[int] = None) -> CaptureSet:
    """Record multiplexed-illumination captures with a camera array.

    Each active source shifts the Fourier-plane field, so camera ``p``
    under source ``q`` samples an effective aperture centered at the
    camera center plus the source offset.  Sources are mutually
    incoherent: one recorded image per (pattern, camera) is the *sum* of
    the per-source intensities.  ``patterns`` lists active-source index
    sets; alternatively pass ``num_patterns``/``n_active``/``seed`` to
    draw them at random.
    """
    n = obj.field.grid_size
    if n != cameras.grid_size:
        raise DimensionError(
            f"object grid {n} does not match camera grid {cameras.grid_size}")
    if patterns is None:
        if num_patterns is None or n_active is None:
            raise InputError("give patterns, or num_patterns and n_active")
        patterns = random_patterns(len(source_offsets), n_active,
                                   num_patterns, seed)
    patterns = [tuple(p) for p in patterns]
    for p in patterns:
        if not p:
            raise InputError("illumination patterns must be non-empty")
        if any(not 0 <= q < len(source_offsets) for q in p):
            raise InputError("pattern references an unknown source")

    psi_hat = forward_transform(obj.field).data
    buf = np.zeros((n, n), dtype=np.complex128)
    images = []
    apertures = []
    groups = []
    for pattern in patterns:
        for cam in cameras.apertures:
            member_ids = []
            total = np.zeros((n, n), dtype=np.float64)
            for q in pattern:
                ox, oy = source_offsets[q]
                ap = ApertureSpec((cam.center[0] + ox, cam.center[1] + oy),
                                  cameras.diameter)
                if not (ap.fits_inside(n) or ap.covers_grid(n)):
                    raise GeometryError(
                        f"camera at {cam.center} with source offset "
                        f"({ox}, {oy}) falls outside the Fourier grid")
                member_ids.append(len(apertures))
                apertures.append(ap)
                total += _band_intensity(psi_hat, ap, buf)
            images.append(total)
            groups.append(tuple(member_ids))
    return CaptureSet(images=np.asarray(images, dtype=np.float32),
                      apertures=tuple(apertures), geometry=None,
                      snr_db=None, seed=seed,
                      multiplex_groups=tuple(groups))
