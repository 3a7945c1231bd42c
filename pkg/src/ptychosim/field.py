"""Complex fields on square grids, centered unitary FFTs, and circular
aperture masks.

Conventions used throughout the toolkit:

* All grids are square, ``n x n`` samples, DC at index ``n // 2`` on both
  axes (the "centered" layout produced by ``fftshift``).
* Transforms are unitary (``1/sqrt(N)`` per direction) so Parseval holds
  exactly and round trips are lossless to machine precision.
* Aperture masks are binary: a sample belongs to the support iff its
  center satisfies the disk inequality, boundary ties included.
* Coordinates are ``(cx, cy)`` where ``cx`` indexes columns (axis 1) and
  ``cy`` indexes rows (axis 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

from .errors import DimensionError, GeometryError, InputError

OBJECT_PLANE = "object-plane"
FOURIER_PLANE = "fourier-plane"
SENSOR_PLANE = "sensor-plane"

_PLANES = (OBJECT_PLANE, FOURIER_PLANE, SENSOR_PLANE)

# Propagation direction: object -> fourier -> sensor.  A forward transform
# advances one plane; the initial estimate of a reconstruction also maps a
# sensor-plane mean image forward onto the Fourier plane.
_FORWARD_TAG = {
    OBJECT_PLANE: FOURIER_PLANE,
    FOURIER_PLANE: SENSOR_PLANE,
    SENSOR_PLANE: FOURIER_PLANE,
}
_INVERSE_TAG = {
    SENSOR_PLANE: FOURIER_PLANE,
    FOURIER_PLANE: OBJECT_PLANE,
}


@dataclass(frozen=True)
class OpticalGeometry:
    """Physical capture geometry and its discretization.

    All lengths are in meters.  ``grid_size`` is the number of samples per
    side of the (square) object, Fourier, and sensor grids.
    """

    wavelength: float
    object_distance: float
    focal_length: float
    aperture_diameter: float
    object_extent: float
    sensor_pixel_pitch: float
    grid_size: int

    def __post_init__(self):
        for name in ("wavelength", "object_distance", "focal_length",
                     "aperture_diameter", "object_extent", "sensor_pixel_pitch"):
            if not getattr(self, name) > 0:
                raise GeometryError(f"{name} must be strictly positive")
        if self.grid_size < 1:
            raise GeometryError("grid_size must be >= 1")
        # The magnification f/z must map the object extent onto the sensor
        # extent; tolerate 1% mismatch for hand-rounded configurations.
        sensor_extent = self.grid_size * self.sensor_pixel_pitch
        imaged_extent = self.object_extent * self.focal_length / self.object_distance
        if abs(imaged_extent - sensor_extent) > 0.01 * sensor_extent:
            raise GeometryError(
                "inconsistent geometry: object extent maps to "
                f"{imaged_extent * 1e3:.3f} mm but sensor spans "
                f"{sensor_extent * 1e3:.3f} mm (>1% off)")

    @property
    def object_pixel(self) -> float:
        """Object-plane sample spacing in meters."""
        return self.object_extent / self.grid_size


def aperture_samples(geom: OpticalGeometry) -> float:
    """Aperture diameter expressed in Fourier-grid samples.

    The aperture of physical diameter ``d`` at distance ``z`` spans a
    spatial-frequency band of ``d / (lambda z)``; the Fourier grid step is
    ``1 / L`` for an object of extent ``L``, hence ``d L / (lambda z)``
    samples.  Callers quantize to an integer sample count.
    """
    return (geom.aperture_diameter * geom.object_extent
            / (geom.wavelength * geom.object_distance))


@dataclass(frozen=True)
class ComplexField:
    """A 2D complex amplitude on a square sample grid.

    ``data`` is stored as read-only complex128; operations return new
    fields, so instances are safe to share across threads.
    """

    data: np.ndarray
    domain_tag: str

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.size == 0:
            raise DimensionError(f"field must be a non-empty 2D array, got shape {arr.shape}")
        if arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"field must be square, got shape {arr.shape}")
        if self.domain_tag not in _PLANES:
            raise InputError(f"unknown domain tag {self.domain_tag!r}")
        arr = np.ascontiguousarray(arr, dtype=np.complex128)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def grid_size(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def intensity(self) -> np.ndarray:
        """|field|^2 as a real array."""
        return np.abs(self.data) ** 2

    def norm(self) -> float:
        """L2 norm of the field."""
        return float(np.linalg.norm(self.data))


def _centered_fft2(data: np.ndarray) -> np.ndarray:
    return _fft.fftshift(_fft.fft2(_fft.ifftshift(data), norm="ortho"))


def _centered_ifft2(data: np.ndarray) -> np.ndarray:
    return _fft.fftshift(_fft.ifft2(_fft.ifftshift(data), norm="ortho"))


def forward_transform(field: ComplexField) -> ComplexField:
    """Centered unitary 2D Fourier transform, advancing one plane.

    Object-plane fields land on the Fourier plane, Fourier-plane fields on
    the sensor plane.  A delta at the grid center maps to a constant of
    magnitude ``1/n``; norms are preserved exactly (Parseval).
    """
    return ComplexField(_centered_fft2(field.data), _FORWARD_TAG[field.domain_tag])


def inverse_transform(field: ComplexField) -> ComplexField:
    """Centered unitary inverse FFT; undoes :func:`forward_transform`."""
    tag = _INVERSE_TAG.get(field.domain_tag)
    if tag is None:
        raise InputError("object-plane fields have no inverse propagation")
    return ComplexField(_centered_ifft2(field.data), tag)


def parity_flip(arr: np.ndarray) -> np.ndarray:
    """Point-reflect an array through the DC sample (index ``i -> -i mod n``).

    Two successive forward transforms invert coordinates this way; use this
    to bring a simulated sensor image back into object orientation.  The
    operation is its own inverse.
    """
    if arr.ndim != 2:
        raise DimensionError("parity_flip expects a 2D array")
    ii = (2 * (arr.shape[0] // 2) - np.arange(arr.shape[0])) % arr.shape[0]
    jj = (2 * (arr.shape[1] // 2) - np.arange(arr.shape[1])) % arr.shape[1]
    return arr[np.ix_(ii, jj)]


@dataclass(frozen=True)
class ApertureSpec:
    """A circular aperture support on the Fourier grid.

    ``center`` may be fractional; it is rounded to the nearest integer
    sample (numpy rounding) before the binary mask is rasterized.
    ``diameter`` is in Fourier samples.
    """

    center: tuple
    diameter: float

    def __post_init__(self):
        if self.diameter < 0:
            raise GeometryError("aperture diameter must be >= 0")

    @property
    def quantized_center(self) -> tuple:
        cx, cy = self.center
        return int(np.rint(cx)), int(np.rint(cy))

    def reach(self) -> int:
        """Largest integer sample offset inside the disk."""
        return int(np.floor(self.diameter / 2.0))

    def fits_inside(self, grid_size: int) -> bool:
        cx, cy = self.quantized_center
        r = self.reach()
        return (cx - r >= 0 and cy - r >= 0
                and cx + r <= grid_size - 1 and cy + r <= grid_size - 1)

    def covers_grid(self, grid_size: int) -> bool:
        cx, cy = self.quantized_center
        r2 = (self.diameter / 2.0) ** 2
        corners = ((0, 0), (0, grid_size - 1), (grid_size - 1, 0),
                   (grid_size - 1, grid_size - 1))
        return all((x - cx) ** 2 + (y - cy) ** 2 <= r2 for y, x in corners)


def aperture_mask(ap: ApertureSpec, grid_size: int) -> np.ndarray:
    """Binary support mask of an aperture on an ``n x n`` Fourier grid.

    A sample is inside iff ``(u - cx)^2 + (v - cy)^2 <= (d/2)^2`` with the
    quantized center; boundary ties are in.  A zero diameter passes nothing.
    """
    if ap.diameter <= 0:
        return np.zeros((grid_size, grid_size), dtype=bool)
    cx, cy = ap.quantized_center
    vv = np.arange(grid_size)[:, None] - cy
    uu = np.arange(grid_size)[None, :] - cx
    return (uu * uu + vv * vv) <= (ap.diameter / 2.0) ** 2


def aperture_patch(ap: ApertureSpec, grid_size: int):
    """Bounding-box view of a mask: ``(row_slice, col_slice, local_mask)``.

    Cheaper than a full-grid mask when many apertures are processed; the
    local mask equals ``aperture_mask(...)[row_slice, col_slice]``.
    """
    if ap.diameter <= 0:
        return slice(0, 0), slice(0, 0), np.zeros((0, 0), dtype=bool)
    cx, cy = ap.quantized_center
    r = ap.reach()
    y0, y1 = max(cy - r, 0), min(cy + r, grid_size - 1) + 1
    x0, x1 = max(cx - r, 0), min(cx + r, grid_size - 1) + 1
    vv = np.arange(y0, y1)[:, None] - cy
    uu = np.arange(x0, x1)[None, :] - cx
    local = (uu * uu + vv * vv) <= (ap.diameter / 2.0) ** 2
    return slice(y0, y1), slice(x0, x1), local


def _check_inside(ap: ApertureSpec, grid_size: int):
    # A disk that covers the entire grid masks nothing and is allowed; a
    # disk that sticks out partway would silently truncate spectrum.
    if not (ap.fits_inside(grid_size) or ap.covers_grid(grid_size)):
        raise GeometryError(
            f"aperture at {ap.center} with diameter {ap.diameter} extends "
            f"beyond the {grid_size}x{grid_size} Fourier grid")


def apply_aperture(field: ComplexField, ap: ApertureSpec) -> ComplexField:
    """Mask a Fourier-plane field with a binary circular aperture.

    Samples outside the support come out exactly zero.  Raises
    ``GeometryError`` if the aperture extends beyond the grid (unless it
    covers the whole grid, which is the identity mask).
    """
    if field.domain_tag != FOURIER_PLANE:
        raise InputError("apply_aperture expects a fourier-plane field")
    n = field.grid_size
    _check_inside(ap, n)
    mask = aperture_mask(ap, n)
    return ComplexField(np.where(mask, field.data, 0.0), FOURIER_PLANE)
