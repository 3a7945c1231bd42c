"""Experiment dataset persistence.

One directory per experiment.  Intensity images live in 32-bit
little-endian float raw files (``.f32``, exact — the capture stack dtype)
next to 16-bit PNG previews (lossy, for humans).  Object fields are
stored as 64-bit raw (``.f64``) amplitude/phase pairs so a reloaded scene
reproduces captures bit-for-bit.  A JSON manifest records geometry,
apertures, seeds, and a SHA-256 checksum for every referenced file; all
checksums are verified on load.  Writes are atomic (temp file + rename).
"""

from __future__ import annotations

import hashlib
import json
import os
from datetime import datetime, timezone

import numpy as np
from PIL import Image

from .capture import ApertureGrid, CaptureSet
from .errors import ChecksumError, InputError
from .field import ApertureSpec, OpticalGeometry
from .scene import ObjectField, ComplexField, OBJECT_PLANE

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"


def _atomic_write(path, data: bytes):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _raw_bytes(arr: np.ndarray, dtype) -> bytes:
    return np.ascontiguousarray(arr, dtype=dtype).tobytes()


def _png16_bytes(arr: np.ndarray) -> bytes:
    """Normalize to the full 16-bit range and encode as PNG."""
    arr = np.asarray(arr, dtype=np.float64)
    top = arr.max()
    scaled = arr / top if top > 0 else arr
    u16 = np.clip(scaled * 65535.0, 0, 65535).astype(np.uint16)
    img = Image.fromarray(u16)
    import io
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _geometry_dict(geom):
    if geom is None:
        return None
    return {
        "wavelength_m": geom.wavelength,
        "object_distance_m": geom.object_distance,
        "focal_length_m": geom.focal_length,
        "aperture_diameter_m": geom.aperture_diameter,
        "object_extent_m": geom.object_extent,
        "sensor_pixel_pitch_m": geom.sensor_pixel_pitch,
        "grid_size": geom.grid_size,
    }


def _geometry_from_dict(d):
    if d is None:
        return None
    return OpticalGeometry(
        wavelength=d["wavelength_m"],
        object_distance=d["object_distance_m"],
        focal_length=d["focal_length_m"],
        aperture_diameter=d["aperture_diameter_m"],
        object_extent=d["object_extent_m"],
        sensor_pixel_pitch=d["sensor_pixel_pitch_m"],
        grid_size=d["grid_size"],
    )


class _Writer:
    """Collects files plus their checksums while writing a dataset dir."""

    def __init__(self, dirpath):
        self.dirpath = dirpath
        self.files = {}
        os.makedirs(dirpath, exist_ok=True)

    def add(self, name: str, data: bytes):
        _atomic_write(os.path.join(self.dirpath, name), data)
        self.files[name] = _sha256(data)

    def finish(self, manifest: dict):
        manifest = dict(manifest)
        manifest["files"] = self.files
        data = json.dumps(manifest, indent=1, sort_keys=True).encode()
        _atomic_write(os.path.join(self.dirpath, MANIFEST_NAME), data)


def _grid_dict(grid):
    if isinstance(grid, dict):
        return dict(grid)
    return {
        "rows": grid.rows, "cols": grid.cols, "step": grid.step,
        "diameter": grid.diameter, "grid_size": grid.grid_size,
        "overlap_fraction": grid.overlap_fraction, "sar": grid.sar,
    }


def save_capture_set(dirpath, capture_set: CaptureSet, grid=None,
                     object_field=None, psi_hat=None, extra=None) -> str:
    """Write a capture set (and optionally its source object) to a directory.

    ``grid`` records the planned lattice parameters for `describe`;
    ``psi_hat`` (the simulated Fourier field) adds a log-magnitude
    coverage mosaic preview.  Returns the manifest path.
    """
    w = _Writer(dirpath)
    images = []
    for i, img in enumerate(capture_set.images):
        raw = f"img_{i:04d}.f32"
        png = f"img_{i:04d}.png"
        w.add(raw, _raw_bytes(img, "<f4"))
        w.add(png, _png16_bytes(img))
        images.append({"raw": raw, "preview": png})

    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": "capture-set",
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "grid_size": capture_set.grid_size,
        "image_count": len(capture_set.images),
        "geometry": _geometry_dict(capture_set.geometry),
        "snr_db": capture_set.snr_db,
        "seed": capture_set.seed,
        "apertures": [{"cx": ap.center[0], "cy": ap.center[1],
                       "d": ap.diameter} for ap in capture_set.apertures],
        "multiplex_groups": (None if capture_set.multiplex_groups is None
                             else [list(g) for g in capture_set.multiplex_groups]),
        "images": images,
        "aperture_grid": None if grid is None else _grid_dict(grid),
        "extra": extra or {},
    }

    if object_field is not None:
        w.add("object_amplitude.f64",
              _raw_bytes(np.abs(object_field.field.data), "<f8"))
        w.add("object_phase.f64",
              _raw_bytes(np.angle(object_field.field.data), "<f8"))
        w.add("object_preview.png", _png16_bytes(object_field.intensity()))
        manifest["object"] = {
            "amplitude": "object_amplitude.f64",
            "phase": "object_phase.f64",
            "phase_model": object_field.phase_model,
            "provenance": object_field.provenance,
        }

    if psi_hat is not None:
        w.add("fourier_logmag.png", _png16_bytes(coverage_mosaic(
            psi_hat, capture_set.apertures, capture_set.grid_size)))

    w.finish(manifest)
    return os.path.join(dirpath, MANIFEST_NAME)


def coverage_mosaic(psi_hat, apertures, grid_size: int) -> np.ndarray:
    """Log-magnitude of the Fourier field over the scanned coverage.

    Dynamic range is compressed with ``log1p``; samples no aperture
    touches are blanked.
    """
    from .field import aperture_patch
    data = psi_hat.data if isinstance(psi_hat, ComplexField) else np.asarray(psi_hat)
    cover = np.zeros((grid_size, grid_size), dtype=bool)
    for ap in apertures:
        sy, sx, local = aperture_patch(ap, grid_size)
        cover[sy, sx] |= local
    return np.log1p(np.abs(data)) * cover


def _read_checked(dirpath, name, manifest):
    path = os.path.join(dirpath, name)
    recorded = manifest["files"].get(name)
    if recorded is None:
        raise ChecksumError(f"{name} is not listed in the manifest")
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError:
        raise ChecksumError(f"missing dataset file {name}") from None
    if _sha256(data) != recorded:
        raise ChecksumError(f"checksum mismatch for {name}")
    return data


def load_manifest(dirpath) -> dict:
    path = os.path.join(dirpath, MANIFEST_NAME)
    try:
        with open(path, "rb") as fh:
            manifest = json.loads(fh.read())
    except FileNotFoundError:
        raise ChecksumError(f"no {MANIFEST_NAME} in {dirpath}") from None
    except json.JSONDecodeError as exc:
        raise ChecksumError(f"corrupt manifest in {dirpath}: {exc}") from None
    if manifest.get("format_version") != FORMAT_VERSION:
        raise InputError(f"unsupported dataset format {manifest.get('format_version')}")
    return manifest


def load_capture_set(dirpath, verify_all=True) -> CaptureSet:
    """Load a capture set, verifying every recorded checksum."""
    manifest = load_manifest(dirpath)
    if manifest["kind"] != "capture-set":
        raise InputError(f"{dirpath} holds a {manifest['kind']}, not a capture set")
    n = manifest["grid_size"]
    if verify_all:
        for name in manifest["files"]:
            _read_checked(dirpath, name, manifest)
    stack = np.empty((manifest["image_count"], n, n), dtype=np.float32)
    for i, entry in enumerate(manifest["images"]):
        data = _read_checked(dirpath, entry["raw"], manifest)
        stack[i] = np.frombuffer(data, dtype="<f4").reshape(n, n)
    apertures = tuple(ApertureSpec((a["cx"], a["cy"]), a["d"])
                      for a in manifest["apertures"])
    groups = manifest["multiplex_groups"]
    return CaptureSet(
        images=stack, apertures=apertures,
        geometry=_geometry_from_dict(manifest["geometry"]),
        snr_db=manifest["snr_db"], seed=manifest["seed"],
        multiplex_groups=None if groups is None else tuple(tuple(g) for g in groups),
    )


def save_object(dirpath, object_field: ObjectField, geometry=None,
                extra=None) -> str:
    """Write a stand-alone object-field dataset."""
    w = _Writer(dirpath)
    w.add("object_amplitude.f64",
          _raw_bytes(np.abs(object_field.field.data), "<f8"))
    w.add("object_phase.f64",
          _raw_bytes(np.angle(object_field.field.data), "<f8"))
    w.add("object_preview.png", _png16_bytes(object_field.intensity()))
    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": "object-field",
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "grid_size": object_field.field.grid_size,
        "geometry": _geometry_dict(geometry),
        "object": {
            "amplitude": "object_amplitude.f64",
            "phase": "object_phase.f64",
            "phase_model": object_field.phase_model,
            "provenance": object_field.provenance,
        },
        "extra": extra or {},
    }
    w.finish(manifest)
    return os.path.join(dirpath, MANIFEST_NAME)


def load_object(dirpath) -> ObjectField:
    """Load an object field from an object or capture-set dataset."""
    manifest = load_manifest(dirpath)
    info = manifest.get("object")
    if not info:
        raise InputError(f"{dirpath} has no stored object field")
    n = manifest["grid_size"]
    amp = np.frombuffer(_read_checked(dirpath, info["amplitude"], manifest),
                        dtype="<f8").reshape(n, n)
    phase = np.frombuffer(_read_checked(dirpath, info["phase"], manifest),
                          dtype="<f8").reshape(n, n)
    return ObjectField(field=ComplexField(amp * np.exp(1j * phase), OBJECT_PLANE),
                       phase_model=info["phase_model"],
                       provenance=info["provenance"])


def load_recovered_intensity(dirpath) -> np.ndarray:
    """Load |recovered field|^2 from a reconstruction artifact directory."""
    manifest = load_manifest(dirpath)
    if manifest["kind"] != "recon-report":
        raise InputError(f"{dirpath} holds a {manifest['kind']}, not a reconstruction")
    n = manifest["grid_size"]
    mag = np.frombuffer(_read_checked(dirpath, "recovered_magnitude.f64", manifest),
                        dtype="<f8").reshape(n, n)
    return mag ** 2


def save_recon_artifacts(dirpath, report, source=None, config=None,
                         extra=None) -> str:
    """Write recovered magnitude/phase images and the run manifest."""
    w = _Writer(dirpath)
    mag = np.abs(report.recovered_image.data)
    phase = np.angle(report.recovered_image.data)
    w.add("recovered_magnitude.f64", _raw_bytes(mag, "<f8"))
    w.add("recovered_phase.f64", _raw_bytes(phase, "<f8"))
    w.add("recovered_intensity.png", _png16_bytes(mag ** 2))
    w.add("recovered_phase.png", _png16_bytes(phase - phase.min()))
    w.add("fourier_logmag.png", _png16_bytes(np.log1p(np.abs(report.psi_hat.data))))
    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": "recon-report",
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "grid_size": report.recovered_image.grid_size,
        "source": source,
        "config": config or {},
        "tau": report.tau,
        "iterations_run": report.iterations_run,
        "converged": report.converged,
        "residual_history": [float(r) for r in report.residual_history],
        "extra": extra or {},
    }
    w.finish(manifest)
    return os.path.join(dirpath, MANIFEST_NAME)


def describe_dataset(dirpath) -> str:
    """Human-readable dataset summary; validates all checksums."""
    manifest = load_manifest(dirpath)
    for name in manifest["files"]:
        _read_checked(dirpath, name, manifest)
    lines = [f"dataset: {os.path.abspath(dirpath)}",
             f"kind: {manifest['kind']}"]
    if manifest["kind"] == "capture-set":
        lines.append(f"grid: {manifest['grid_size']} x {manifest['grid_size']} samples")
        lines.append(f"images: {manifest['image_count']}")
        grid = manifest.get("aperture_grid")
        if grid:
            lines.append(f"apertures: {grid['rows']} x {grid['cols']}, "
                         f"diameter {grid['diameter']:g} samples, step {grid['step']}")
            lines.append(f"overlap: {100.0 * grid['overlap_fraction']:.1f}%")
            lines.append(f"SAR: {grid['sar']:.2f}")
        else:
            lines.append(f"apertures: {len(manifest['apertures'])} (unstructured)")
        snr = manifest.get("snr_db")
        lines.append("noise: none" if snr is None else f"noise: {snr:g} dB SNR (seed {manifest.get('seed')})")
        if manifest.get("multiplex_groups"):
            sizes = sorted({len(g) for g in manifest["multiplex_groups"]})
            lines.append(f"multiplexed: {len(manifest['multiplex_groups'])} images, "
                         f"group sizes {sizes}")
        geom = manifest.get("geometry")
        if geom:
            lines.append(
                "geometry: lambda %.0f nm, z %.3g m, f %.3g m, d %.3g mm, "
                "extent %.3g mm, pitch %.2g um" % (
                    geom["wavelength_m"] * 1e9, geom["object_distance_m"],
                    geom["focal_length_m"], geom["aperture_diameter_m"] * 1e3,
                    geom["object_extent_m"] * 1e3,
                    geom["sensor_pixel_pitch_m"] * 1e6))
        if manifest.get("object"):
            lines.append(f"object: {manifest['object']['provenance']} "
                         f"({manifest['object']['phase_model']} phase)")
    elif manifest["kind"] == "recon-report":
        lines.append(f"iterations: {manifest['iterations_run']} "
                     f"(converged: {manifest['converged']})")
        lines.append(f"tau: {manifest['tau']:g}")
    return "\n".join(lines)
