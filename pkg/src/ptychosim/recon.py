"""Alternating-minimization phase retrieval.

Recovers the complex Fourier-plane field from a stack of band-passed
intensity captures.  Each outer iteration processes every aperture
jointly:

1. project the current Fourier estimate through each aperture to the
   sensor plane,
2. replace the sensor magnitudes with the measured ones (for multiplexed
   captures the measured image constrains the *sum* of member
   intensities),
3. re-solve the ridge-regularized least-squares problem for the Fourier
   field, which is closed-form per Fourier sample because the transforms
   are unitary and the aperture operators are binary masks.

Iteration stops when the relative change of the Fourier estimate falls
below ``rel_tol`` or after ``max_iters`` iterations.  The loop keeps its
working arrays in FFT index order so no shift passes are spent per
transform; results are identical to the centered formulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
import scipy.fft as _fft

from .capture import ApertureGrid, CaptureSet
from .errors import DimensionError, InputError, NumericalError
from .field import (FOURIER_PLANE, SENSOR_PLANE, ComplexField,
                    _centered_ifft2, aperture_patch, forward_transform,
                    inverse_transform)

MODE_SEQUENTIAL = "sequential"
MODE_MULTIPLEXED = "multiplexed"

PRECISION_DOUBLE = "double"
PRECISION_SINGLE = "single"


@dataclass(frozen=True)
class ReconConfig:
    """Solver settings.

    ``tau`` is the ridge weight of the Fourier update; ``None`` selects
    ``1e-6 * max_overlap_count`` at run time (recorded in the report).
    ``precision`` picks the working dtype of the iteration: ``"double"``
    is the faithful default, ``"single"`` roughly halves runtime for
    large sweeps at float32 accuracy.
    """

    tau: Optional[float] = None
    max_iters: int = 1000
    rel_tol: float = 1e-5
    mode: str = MODE_SEQUENTIAL
    precision: str = PRECISION_DOUBLE

    def __post_init__(self):
        if self.tau is not None and self.tau < 0:
            raise InputError("tau must be nonnegative")
        if self.max_iters < 0:
            raise InputError("max_iters must be >= 0")
        if self.rel_tol <= 0:
            raise InputError("rel_tol must be positive")
        if self.mode not in (MODE_SEQUENTIAL, MODE_MULTIPLEXED):
            raise InputError(f"unknown mode {self.mode!r}")
        if self.precision not in (PRECISION_DOUBLE, PRECISION_SINGLE):
            raise InputError(f"unknown precision {self.precision!r}")


@dataclass
class ReconReport:
    """Reconstruction output and per-iteration convergence trace."""

    psi_hat: ComplexField
    recovered_image: ComplexField
    residual_history: list = dc_field(default_factory=list)
    iterations_run: int = 0
    converged: bool = False
    tau: float = 0.0


def _patches(apertures, grid_size):
    return [aperture_patch(ap, grid_size) for ap in apertures]


def _overlap_count(patches, grid_size):
    count = np.zeros((grid_size, grid_size), dtype=np.float64)
    for sy, sx, local in patches:
        count[sy, sx] += local
    return count


def initialize(capture_set: CaptureSet) -> ComplexField:
    """Initial Fourier-plane estimate from the mean captured image.

    Forward-transforms the square root of the mean intensity, then scales
    the result so the total masked energy matches the total captured
    energy.
    """
    if len(capture_set.images) == 0:
        raise InputError("cannot initialize from an empty capture set")
    n = capture_set.grid_size
    mean_img = capture_set.images.astype(np.float64).mean(axis=0)
    psi0 = forward_transform(
        ComplexField(np.sqrt(mean_img).astype(complex), SENSOR_PLANE)).data
    patches = _patches(capture_set.apertures, n)
    count = _overlap_count(patches, n)
    masked_energy = float(np.sum(count * (psi0.real ** 2 + psi0.imag ** 2)))
    target = float(capture_set.images.astype(np.float64).sum())
    scale = np.sqrt(target / masked_energy) if masked_energy > 0 else 0.0
    return ComplexField(psi0 * scale, FOURIER_PLANE)


def magnitude_project(psi: ComplexField, intensity: np.ndarray) -> ComplexField:
    """Replace sensor-plane magnitudes with measured ones, keeping phase.

    Where the field is exactly zero but the measurement is not, the output
    takes magnitude ``sqrt(I)`` with phase 0.
    """
    intensity = np.asarray(intensity, dtype=np.float64)
    if intensity.shape != psi.data.shape:
        raise DimensionError("field and intensity shapes differ")
    mag = np.abs(psi.data)
    target = np.sqrt(intensity)
    safe = np.where(mag > 0, mag, 1.0)
    out = np.where(mag > 0, psi.data * (target / safe), target.astype(complex))
    return ComplexField(out, psi.domain_tag)


def fourier_update(projected, apertures, tau: float) -> ComplexField:
    """Closed-form minimizer of the masked least-squares problem.

    Solves ``min sum_i ||psi_i - F R_i x||^2 + tau ||x||^2`` per Fourier
    sample: ``x(u) = sum_i m_i(u) (F^-1 psi_i)(u) / (sum_i m_i(u) + tau)``.
    Samples covered by no aperture (with ``tau=0``) come out zero.
    """
    if isinstance(apertures, ApertureGrid):
        apertures = apertures.apertures
    if len(projected) != len(apertures):
        raise InputError("one projected field per aperture required")
    if tau < 0:
        raise InputError("tau must be nonnegative")
    fields = [p.data if isinstance(p, ComplexField) else np.asarray(p)
              for p in projected]
    n = fields[0].shape[0]
    patches = _patches(apertures, n)
    num = np.zeros((n, n), dtype=np.complex128)
    for psi, (sy, sx, local) in zip(fields, patches):
        inv = _centered_ifft2(psi)
        num[sy, sx] += local * inv[sy, sx]
    den = _overlap_count(patches, n) + tau
    out = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return ComplexField(out, FOURIER_PLANE)


def _resolve_tau(cfg: ReconConfig, count: np.ndarray) -> float:
    if cfg.tau is not None:
        return float(cfg.tau)
    max_count = float(count.max())
    return 1e-6 * max_count if max_count > 0 else 1e-6


def _flat_support(ap, grid_size, pos):
    """Flat indices of an aperture's disk samples in FFT index order."""
    sy, sx, local = aperture_patch(ap, grid_size)
    rows = pos[np.arange(sy.start, sy.stop)]
    cols = pos[np.arange(sx.start, sx.stop)]
    flat = (rows[:, None] * grid_size + cols[None, :])[local]
    return np.sort(flat)


def reconstruct(capture_set: CaptureSet, cfg: ReconConfig) -> ReconReport:
    """Run the alternating-minimization loop on a capture set.

    The config mode must match the capture set (multiplex groups present
    iff multiplexed).  Raises ``NumericalError`` (with the iteration
    index) if the estimate stops being finite.
    """
    if cfg.mode == MODE_MULTIPLEXED and not capture_set.is_multiplexed:
        raise InputError("multiplexed mode needs multiplex_groups on the set")
    if cfg.mode == MODE_SEQUENTIAL and capture_set.is_multiplexed:
        raise InputError("sequential mode cannot consume multiplexed captures")
    if len(capture_set.images) == 0:
        raise InputError("empty capture set")

    single = cfg.precision == PRECISION_SINGLE
    cdtype = np.complex64 if single else np.complex128
    rdtype = np.float32 if single else np.float64

    n = capture_set.grid_size
    if capture_set.is_multiplexed:
        groups = capture_set.multiplex_groups
    else:
        groups = tuple((i,) for i in range(len(capture_set.apertures)))

    # pos[k] = position of centered index k in FFT index order
    pos = np.empty(n, dtype=np.intp)
    pos[_fft.ifftshift(np.arange(n))] = np.arange(n)
    supports = [_flat_support(ap, n, pos) for ap in capture_set.apertures]
    count = np.zeros(n * n, dtype=rdtype)
    for idx in supports:
        count[idx] += 1
    tau = _resolve_tau(cfg, count)
    den = (count + np.asarray(tau, dtype=rdtype)).reshape(n, n)
    covered = den > 0

    # measured magnitudes, reordered once into FFT index order
    targets = [np.sqrt(_fft.ifftshift(img)).astype(rdtype, copy=False)
               for img in capture_set.images]

    psi_hat = _fft.ifftshift(initialize(capture_set).data).astype(cdtype)
    residuals = []
    iterations = 0
    converged = False
    buf = np.zeros((n, n), dtype=cdtype)
    flat_buf = buf.reshape(-1)

    for k in range(cfg.max_iters):
        acc = np.zeros((n, n), dtype=cdtype)
        flat_acc = acc.reshape(-1)
        flat_psi = psi_hat.reshape(-1)
        for g, members in enumerate(groups):
            fields = []
            for i in members:
                idx = supports[i]
                flat_buf[idx] = flat_psi[idx]
                fields.append(_fft.fft2(buf, norm="ortho"))
                flat_buf[idx] = 0.0
            if capture_set.is_multiplexed:
                total = np.zeros((n, n), dtype=rdtype)
                for f in fields:
                    total += f.real ** 2 + f.imag ** 2
                image = np.square(targets[g])
                eps = max(1e-12 * float(image.max()),
                          float(np.finfo(rdtype).tiny))
                factor = np.sqrt(image / (total + eps))
                for i, f in zip(members, fields):
                    f *= factor
                    inv = _fft.ifft2(f, norm="ortho")
                    flat_inv = inv.reshape(-1)
                    idx = supports[i]
                    flat_acc[idx] += flat_inv[idx]
            else:
                f = fields[0]
                target = targets[g]
                mag = np.abs(f)
                zero = mag == 0.0
                if zero.any():
                    factor = np.divide(target, mag,
                                       out=np.zeros_like(mag), where=~zero)
                    f *= factor
                    f[zero] = target[zero]
                else:
                    f *= target / mag
                inv = _fft.ifft2(f, norm="ortho")
                flat_inv = inv.reshape(-1)
                idx = supports[members[0]]
                flat_acc[idx] += flat_inv[idx]
        new = np.divide(acc, den, out=np.zeros_like(acc), where=covered)
        if not np.all(np.isfinite(new.view(rdtype))):
            raise NumericalError(
                f"non-finite Fourier estimate at iteration {k}", iteration=k)
        prev_norm = float(np.linalg.norm(psi_hat))
        diff = float(np.linalg.norm(new - psi_hat))
        rel = diff / prev_norm if prev_norm > 0 else diff
        if not np.isfinite(rel):
            raise NumericalError(
                f"non-finite residual at iteration {k}", iteration=k)
        residuals.append(rel)
        psi_hat = new
        iterations = k + 1
        if rel < cfg.rel_tol:
            converged = True
            break

    psi_field = ComplexField(_fft.fftshift(psi_hat).astype(np.complex128),
                             FOURIER_PLANE)
    recovered = inverse_transform(psi_field)
    return ReconReport(psi_hat=psi_field, recovered_image=recovered,
                       residual_history=residuals, iterations_run=iterations,
                       converged=converged, tau=tau)
