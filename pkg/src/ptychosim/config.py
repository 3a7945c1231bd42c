"""Flat key-value experiment configs.

The config format is one ``key = value`` pair per line, ``#`` comments,
and explicit units in key names (``wavelength_nm``, ``pixel_pitch_um``).
Parse errors and validation failures raise ``ConfigError`` with the file
and line they came from.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field as dc_field, fields as dc_fields
from typing import Optional

from .errors import ConfigError
from .field import OpticalGeometry

SWEEP_AXES = ("none", "overlap", "sar", "snr", "multiplex")


@dataclass
class ExperimentConfig:
    """Resolved experiment parameters (SI units internally)."""

    # geometry
    grid_size_px: int = 256
    wavelength_nm: float = 550.0
    object_distance_m: float = 50.0
    focal_length_mm: float = 800.0
    aperture_diameter_mm: float = 5.5859375
    object_extent_mm: float = 64.0
    pixel_pitch_um: float = 4.0
    # scene
    scene_kind: str = "chart"            # chart | image
    chart_widths_px: tuple = (24, 20, 16, 12, 10, 8, 6, 5, 4, 3, 2)
    chart_pairs: int = 2
    chart_bar_length_factor: int = 2
    chart_padding_px: int = 4
    chart_white: float = 1.0
    chart_black: float = 0.0
    image_path: Optional[str] = None
    phase_model: str = "flat"            # flat | random-uniform
    # aperture grid
    overlap_pct: float = 61.0
    count_per_side: Optional[int] = 13
    sar_target: Optional[float] = None
    # noise
    snr_db: Optional[float] = 30.0       # None disables
    # reconstruction
    recon_tau: Optional[float] = None    # None = auto
    recon_max_iters: int = 150
    recon_rel_tol: float = 1e-5
    recon_mode: str = "sequential"       # sequential | multiplexed
    recon_precision: str = "single"      # single | double
    # multiplexed illumination
    mux_cameras_per_side: int = 7
    mux_camera_diameter_samples: Optional[float] = None
    mux_sources_per_side: int = 7
    mux_source_overlap_pct: float = 66.0
    mux_n_active: int = 4
    mux_patterns_t: int = 3
    # sweep
    sweep_axis: str = "none"
    sweep_values: tuple = ()
    sar_counts: tuple = (3, 7, 9, 13)    # per-side counts inside an snr sweep
    # run
    seed: int = 1234
    output_dir: Optional[str] = None

    def geometry(self) -> OpticalGeometry:
        return OpticalGeometry(
            wavelength=self.wavelength_nm * 1e-9,
            object_distance=self.object_distance_m,
            focal_length=self.focal_length_mm * 1e-3,
            aperture_diameter=self.aperture_diameter_mm * 1e-3,
            object_extent=self.object_extent_mm * 1e-3,
            sensor_pixel_pitch=self.pixel_pitch_um * 1e-6,
            grid_size=self.grid_size_px,
        )


# Paper-scale parameter overlay (the 512 px configuration); applied before
# explicit keys so a config can still override individual entries.
PAPER_SCALE_OVERLAY = {
    "grid_size_px": 512,
    "aperture_diameter_mm": 18.0,
    "pixel_pitch_um": 2.0,
    "chart_widths_px": tuple(range(20, 0, -1)),
    "chart_pairs": 3,
    "chart_bar_length_factor": 3,
    "chart_padding_px": 8,
    "count_per_side": 21,
    "recon_max_iters": 1000,
    "recon_precision": "double",
}

_FIELD_TYPES = {f.name: f for f in dc_fields(ExperimentConfig)}

_NONE_WORDS = ("none", "off", "auto", "")


def _parse_scalar(key: str, text: str, where: str):
    text = text.strip()
    if key in ("chart_widths_px", "sar_counts"):
        if text.lower() in _NONE_WORDS:
            raise ConfigError(f"{where}: {key} needs a value list")
        try:
            return tuple(int(v) for v in text.split(","))
        except ValueError:
            raise ConfigError(f"{where}: {key} must be comma-separated integers") from None
    if key == "sweep_values":
        return tuple(v.strip() for v in text.split(",") if v.strip())
    if key in ("image_path", "output_dir"):
        return None if text.lower() in _NONE_WORDS else text
    if key in ("scene_kind", "phase_model", "recon_mode", "recon_precision",
               "sweep_axis"):
        return text
    if key in ("snr_db", "sar_target", "recon_tau", "count_per_side",
               "mux_camera_diameter_samples") and text.lower() in _NONE_WORDS:
        return None
    target = _FIELD_TYPES[key].type
    try:
        if "int" in str(target) or key in ("grid_size_px", "chart_pairs",
                                           "chart_bar_length_factor",
                                           "chart_padding_px", "count_per_side",
                                           "mux_cameras_per_side",
                                           "mux_sources_per_side", "mux_n_active",
                                           "mux_patterns_t", "recon_max_iters",
                                           "seed"):
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {key} = {text!r}") from None


def parse_config_text(text: str, source: str = "<config>",
                      overrides: Optional[dict] = None,
                      paper_scale: bool = False) -> ExperimentConfig:
    """Parse config text into a validated :class:`ExperimentConfig`."""
    values = {}
    if paper_scale:
        values.update(PAPER_SCALE_OVERLAY)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _parse_scalar(key, val, f"{source}:{lineno}")
    for key, val in (overrides or {}).items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{source}: unknown override key {key!r}")
        if isinstance(val, str):
            val = _parse_scalar(key, val, f"{source}:<override>")
        values[key] = val
    cfg = ExperimentConfig(**values)
    _validate(cfg, source)
    return cfg


def parse_config(path, overrides: Optional[dict] = None,
                 paper_scale: bool = False) -> ExperimentConfig:
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, source=str(path), overrides=overrides,
                             paper_scale=paper_scale)


def _validate(cfg: ExperimentConfig, source: str):
    def bad(msg):
        raise ConfigError(f"{source}: {msg}")

    if cfg.scene_kind not in ("chart", "image"):
        bad(f"scene_kind must be chart or image, got {cfg.scene_kind!r}")
    if cfg.scene_kind == "image":
        if not cfg.image_path:
            bad("scene_kind=image requires image_path")
        if not os.path.exists(cfg.image_path):
            bad(f"image_path does not exist: {cfg.image_path}")
    if cfg.phase_model not in ("flat", "random-uniform"):
        bad(f"unknown phase_model {cfg.phase_model!r}")
    if not 0.0 <= cfg.overlap_pct < 100.0:
        bad("overlap_pct must be in [0, 100)")
    if cfg.count_per_side is None and cfg.sar_target is None:
        bad("give count_per_side or sar_target")
    if cfg.snr_db is not None and not math.isfinite(cfg.snr_db):
        bad("snr_db must be finite (or none/off)")
    if cfg.recon_mode not in ("sequential", "multiplexed"):
        bad(f"unknown recon_mode {cfg.recon_mode!r}")
    if cfg.recon_precision not in ("single", "double"):
        bad(f"unknown recon_precision {cfg.recon_precision!r}")
    if cfg.sweep_axis not in SWEEP_AXES:
        bad(f"sweep_axis must be one of {SWEEP_AXES}")
    if cfg.sweep_axis != "none" and not cfg.sweep_values:
        bad(f"sweep_axis={cfg.sweep_axis} needs sweep_values")
    if cfg.sweep_axis == "multiplex":
        for v in cfg.sweep_values:
            parts = v.split(":")
            if len(parts) != 2 or not all(p.strip().isdigit() for p in parts):
                bad(f"multiplex sweep values look like 'n_mux:T', got {v!r}")
    elif cfg.sweep_axis != "none":
        for v in cfg.sweep_values:
            try:
                float(v)
            except ValueError:
                bad(f"sweep value {v!r} is not a number")
    if cfg.recon_max_iters < 0:
        bad("recon_max_iters must be >= 0")
    if cfg.recon_rel_tol <= 0:
        bad("recon_rel_tol must be positive")
    try:
        cfg.geometry()
    except Exception as exc:
        bad(f"invalid geometry: {exc}")
