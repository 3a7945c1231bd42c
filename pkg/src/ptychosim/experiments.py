"""Config-driven experiment orchestration.

Turns an :class:`~ptychosim.config.ExperimentConfig` into datasets,
reconstructions, metrics CSV rows, and a run manifest.  A run is either a
single experiment point or a sweep along one axis (overlap, SAR, SNR, or
multiplex pattern count); sweep points are independent jobs and may run
in parallel worker processes.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import __version__ as _version
from .capture import (CaptureSet, add_noise, capture, capture_multiplexed,
                      count_for_sar, plan_grid, plan_source_offsets,
                      random_patterns, sensor_to_object)
from .config import ExperimentConfig
from .dataset import save_capture_set, save_recon_artifacts
from .errors import InputError
from .field import OpticalGeometry, aperture_samples, forward_transform
from .metrics import (brightness_fit, group_contrasts, intensity_rmse,
                      mtf20_limit, write_metrics_csv)
from .recon import ReconConfig, reconstruct
from .scene import (ResolutionChartSpec, make_chart, make_object_from_image,
                    load_grayscale)


def stage_seed(master: int, stage: str) -> int:
    """Deterministic per-stage seed derived from the master seed by name."""
    digest = hashlib.sha256(f"{master}/{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2 ** 63)


def paper_geometry() -> OpticalGeometry:
    """The 512 px bench configuration (550 nm, f=800 mm, d=18 mm, 50 m)."""
    return OpticalGeometry(wavelength=550e-9, object_distance=50.0,
                           focal_length=0.8, aperture_diameter=0.018,
                           object_extent=0.064, sensor_pixel_pitch=2e-6,
                           grid_size=512)


def desk_geometry() -> OpticalGeometry:
    """A 256 px configuration whose aperture spans 13 Fourier samples."""
    return OpticalGeometry(wavelength=550e-9, object_distance=50.0,
                           focal_length=0.8, aperture_diameter=5.5859375e-3,
                           object_extent=0.064, sensor_pixel_pitch=4e-6,
                           grid_size=256)


def paper_chart_spec() -> ResolutionChartSpec:
    return ResolutionChartSpec(grid_size=512,
                               group_widths=tuple(range(20, 0, -1)),
                               pairs_per_group=3, bar_length_factor=3,
                               padding=8)


def desk_chart_spec() -> ResolutionChartSpec:
    return ResolutionChartSpec(grid_size=256,
                               group_widths=(24, 20, 16, 12, 10, 8, 6, 5, 4, 3, 2),
                               pairs_per_group=2, bar_length_factor=2,
                               padding=4)


def build_scene(cfg: ExperimentConfig, seed: Optional[int] = None):
    if cfg.scene_kind == "chart":
        spec = ResolutionChartSpec(
            grid_size=cfg.grid_size_px, group_widths=cfg.chart_widths_px,
            pairs_per_group=cfg.chart_pairs,
            bar_length_factor=cfg.chart_bar_length_factor,
            padding=cfg.chart_padding_px,
            white=cfg.chart_white, black=cfg.chart_black)
        return make_chart(spec)
    pixels = load_grayscale(cfg.image_path)
    return make_object_from_image(pixels, phase_model=cfg.phase_model,
                                  seed=seed, provenance=cfg.image_path)


def quantized_aperture_samples(geom: OpticalGeometry) -> float:
    return float(np.rint(aperture_samples(geom)))


@dataclass
class PointSpec:
    """One experiment point inside a run."""

    label: str
    overlap_pct: float
    count_per_side: Optional[int] = None
    snr_db: Optional[float] = None
    mode: str = "sequential"
    n_active: int = 1
    patterns_t: int = 1
    center_only: bool = False


@dataclass
class PointResult:
    label: str
    rows: list
    dataset_dir: Optional[str]
    recon_dir: Optional[str]
    realized: dict


def _chart_rows(label, intensity, groups, truth):
    rows = []
    records = group_contrasts(intensity, groups)
    for rec in records:
        rows.append((label, "contrast", rec.width, rec.contrast))
    rows.append((label, "mtf20_limit_px", None, mtf20_limit(records)))
    rows.append((label, "intensity_rmse", None, intensity_rmse(intensity, truth)))
    rows.append((label, "brightness_scale", None, brightness_fit(intensity, truth)))
    return rows


def _image_rows(label, intensity, truth):
    return [(label, "intensity_rmse", None, intensity_rmse(intensity, truth)),
            (label, "brightness_scale", None, brightness_fit(intensity, truth))]


def run_point(cfg: ExperimentConfig, scene, point: PointSpec,
              out_dir: Optional[str]) -> PointResult:
    """Capture, reconstruct, and score one experiment point."""
    geom = cfg.geometry()
    n = cfg.grid_size_px
    ds = quantized_aperture_samples(geom)
    truth = scene.intensity()
    noise_seed = stage_seed(cfg.seed, f"noise/{point.label}")
    rows = []
    realized = {"label": point.label, "overlap_pct": point.overlap_pct,
                "snr_db": point.snr_db}

    if point.mode == "multiplexed":
        cam_d = cfg.mux_camera_diameter_samples
        if cam_d is None:
            cam_d = ds
        cameras = plan_grid(0.0, cfg.mux_cameras_per_side, cam_d, n)
        src_step = int(np.rint((1.0 - cfg.mux_source_overlap_pct / 100.0) * cam_d))
        sources = plan_source_offsets(cfg.mux_sources_per_side, src_step)
        pat_seed = stage_seed(cfg.seed, f"patterns/{point.label}")
        patterns = random_patterns(len(sources), point.n_active,
                                   point.patterns_t, pat_seed)
        cset = capture_multiplexed(scene, cameras, sources, patterns)
        cset.geometry = geom
        grid = cameras
        realized.update(camera_diameter=cam_d, source_step=src_step,
                        n_active=point.n_active, patterns_t=point.patterns_t,
                        pattern_seed=pat_seed)
    else:
        count = point.count_per_side
        if count is None:
            count = count_for_sar(cfg.sar_target, point.overlap_pct, ds)
        grid = plan_grid(point.overlap_pct, count, ds, n)
        cset = capture(scene, grid)
        cset.geometry = geom
        realized.update(count_per_side=count, step=grid.step,
                        overlap_realized_pct=100.0 * grid.overlap_fraction,
                        sar=grid.sar, diameter_samples=ds)

    if point.snr_db is not None:
        cset = add_noise(cset, point.snr_db, noise_seed)
        realized["noise_seed"] = noise_seed

    dataset_dir = recon_dir = None
    if out_dir is not None:
        dataset_dir = os.path.join(out_dir, point.label, "dataset")
        save_capture_set(dataset_dir, cset, grid=grid, object_field=scene,
                         psi_hat=forward_transform(scene.field),
                         extra={"point": point.label, "chart": _chart_extra(cfg)})

    rows.append((point.label, "image_count", None, len(cset.images)))
    for key in ("step", "overlap_realized_pct", "sar"):
        if key in realized:
            rows.append((point.label, key, None, realized[key]))

    if point.center_only:
        img = sensor_to_object(cset.images[0].astype(np.float64))
        if scene.groups:
            rows += _chart_rows(point.label, img, scene.groups, truth)
        else:
            rows += _image_rows(point.label, img, truth)
        return PointResult(point.label, rows, dataset_dir, None, realized)

    rcfg = ReconConfig(tau=cfg.recon_tau, max_iters=cfg.recon_max_iters,
                       rel_tol=cfg.recon_rel_tol, mode=point.mode,
                       precision=cfg.recon_precision)
    report = reconstruct(cset, rcfg)
    realized.update(tau=report.tau, iterations=report.iterations_run,
                    converged=report.converged)
    rows.append((point.label, "iterations", None, report.iterations_run))
    rows.append((point.label, "converged", None, int(report.converged)))
    rows.append((point.label, "tau", None, report.tau))

    if out_dir is not None:
        recon_dir = os.path.join(out_dir, point.label, "recon")
        save_recon_artifacts(
            recon_dir, report, source=dataset_dir,
            config={"tau": report.tau, "max_iters": rcfg.max_iters,
                    "rel_tol": rcfg.rel_tol, "mode": rcfg.mode,
                    "precision": rcfg.precision})

    recovered = report.recovered_image.intensity()
    if scene.groups:
        rows += _chart_rows(point.label, recovered, scene.groups, truth)
    else:
        rows += _image_rows(point.label, recovered, truth)
    return PointResult(point.label, rows, dataset_dir, recon_dir, realized)


def _chart_extra(cfg: ExperimentConfig):
    if cfg.scene_kind != "chart":
        return None
    return {"widths": list(cfg.chart_widths_px), "pairs": cfg.chart_pairs,
            "bar_length_factor": cfg.chart_bar_length_factor,
            "padding": cfg.chart_padding_px,
            "white": cfg.chart_white, "black": cfg.chart_black}


def plan_points(cfg: ExperimentConfig) -> list:
    """Expand a config into its experiment points."""
    if cfg.sweep_axis == "none":
        if cfg.recon_mode == "multiplexed":
            return [PointSpec(label="single", overlap_pct=0.0,
                              mode="multiplexed", n_active=cfg.mux_n_active,
                              patterns_t=cfg.mux_patterns_t)]
        return [PointSpec(label="single", overlap_pct=cfg.overlap_pct,
                          count_per_side=cfg.count_per_side,
                          snr_db=cfg.snr_db)]
    points = []
    if cfg.sweep_axis == "overlap":
        for v in cfg.sweep_values:
            pct = float(v)
            points.append(PointSpec(label=f"overlap{v}", overlap_pct=pct,
                                    count_per_side=None, snr_db=cfg.snr_db))
    elif cfg.sweep_axis == "sar":
        for v in cfg.sweep_values:
            count = int(float(v))
            points.append(PointSpec(label=f"sar{count}",
                                    overlap_pct=cfg.overlap_pct,
                                    count_per_side=count, snr_db=cfg.snr_db))
    elif cfg.sweep_axis == "snr":
        for v in cfg.sweep_values:
            snr = float(v)
            points.append(PointSpec(label=f"snr{v}-center", overlap_pct=0.0,
                                    count_per_side=1, snr_db=snr,
                                    center_only=True))
            for count in cfg.sar_counts:
                points.append(PointSpec(label=f"snr{v}-sar{count}",
                                        overlap_pct=cfg.overlap_pct,
                                        count_per_side=count, snr_db=snr))
    elif cfg.sweep_axis == "multiplex":
        for v in cfg.sweep_values:
            nm, _, t = v.partition(":")
            points.append(PointSpec(label=f"mux{nm}x{t}", overlap_pct=0.0,
                                    mode="multiplexed", n_active=int(nm),
                                    patterns_t=int(t), snr_db=cfg.snr_db))
    if not points:
        raise InputError("sweep produced no points")
    return points


def _execute_point(args):
    cfg, scene, point, out_dir = args
    return run_point(cfg, scene, point, out_dir)


@dataclass
class RunResult:
    out_dir: str
    csv_path: str
    manifest_path: str
    points: list


def run(cfg: ExperimentConfig, out_dir: Optional[str] = None,
        workers: int = 1) -> RunResult:
    """Execute a config end to end and write all artifacts.

    Produces one dataset + reconstruction directory per point, a combined
    ``metrics.csv``, and ``run_manifest.json`` with every resolved
    parameter (quantized step, realized SAR, per-stage seeds).
    """
    out_dir = out_dir or cfg.output_dir
    if not out_dir:
        raise InputError("no output directory (set output_dir or pass --out)")
    os.makedirs(out_dir, exist_ok=True)
    scene_seed = stage_seed(cfg.seed, "scene")
    scene = build_scene(cfg, seed=scene_seed)
    points = plan_points(cfg)

    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_execute_point,
                                    [(cfg, scene, p, out_dir) for p in points]))
    else:
        results = [run_point(cfg, scene, p, out_dir) for p in points]

    rows = []
    for res in results:
        rows.extend(res.rows)
    csv_path = os.path.join(out_dir, "metrics.csv")
    write_metrics_csv(csv_path, rows)

    manifest = {
        "toolkit_version": _version,
        "config": asdict(cfg),
        "scene_seed": scene_seed,
        "points": [res.realized for res in results],
        "metrics_csv": "metrics.csv",
    }
    manifest_path = os.path.join(out_dir, "run_manifest.json")
    tmp = manifest_path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    os.replace(tmp, manifest_path)
    return RunResult(out_dir=out_dir, csv_path=csv_path,
                     manifest_path=manifest_path, points=results)
