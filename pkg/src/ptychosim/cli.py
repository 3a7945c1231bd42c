"""Command-line harness.

Subcommands cover the pipeline stages (``scene``, ``capture``, ``noise``,
``recon``, ``eval``), the sweep driver (``sweep``), and dataset inspection
(``describe``).  Experiment parameters come from a flat key-value config
file; every config key is also available as a ``--key-name`` flag that
overrides the file.

Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields as dc_fields

import numpy as np

from .capture import add_noise, capture, plan_grid
from .config import ExperimentConfig, parse_config, parse_config_text
from .dataset import (describe_dataset, load_capture_set, load_manifest,
                      load_object, load_recovered_intensity, save_capture_set,
                      save_object, save_recon_artifacts)
from .errors import (ChecksumError, ConfigError, DimensionError,
                     GeometryError, InputError, LayoutError, NumericalError)
from .experiments import (build_scene, quantized_aperture_samples, run,
                          stage_seed)
from .field import forward_transform
from .metrics import (brightness_fit, group_contrasts, intensity_rmse,
                      mtf20_limit, write_metrics_csv)
from .recon import ReconConfig, reconstruct
from .scene import ResolutionChartSpec, make_chart
from .capture import sensor_to_object

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_CONFIG_KEYS = [f.name for f in dc_fields(ExperimentConfig)]


def _add_config_flags(parser):
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--paper-scale", action="store_true",
                        help="start from the 512px bench parameter overlay")
    group = parser.add_argument_group("config key overrides")
    for key in _CONFIG_KEYS:
        if key == "seed":
            continue
        group.add_argument(f"--{key.replace('_', '-')}", dest=f"cfg_{key}",
                           metavar="V", help=argparse.SUPPRESS)
    parser.add_argument("--seed", type=int, help="master seed override")


def _load_config(args) -> ExperimentConfig:
    overrides = {}
    for key in _CONFIG_KEYS:
        val = getattr(args, f"cfg_{key}", None)
        if val is not None:
            overrides[key] = val
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.config:
        return parse_config(args.config, overrides=overrides,
                            paper_scale=args.paper_scale)
    return parse_config_text("", source="<defaults>", overrides=overrides,
                             paper_scale=args.paper_scale)


def _cmd_scene(args):
    cfg = _load_config(args)
    scene = build_scene(cfg, seed=stage_seed(cfg.seed, "scene"))
    out = args.out or cfg.output_dir
    if not out:
        raise ConfigError("scene needs --out or output_dir")
    save_object(out, scene, geometry=cfg.geometry(),
                extra={"chart": _chart_extra_or_none(cfg)})
    print(f"object written to {out}")
    return EXIT_OK


def _chart_extra_or_none(cfg):
    from .experiments import _chart_extra
    return _chart_extra(cfg)


def _cmd_capture(args):
    cfg = _load_config(args)
    out = args.out or cfg.output_dir
    if not out:
        raise ConfigError("capture needs --out or output_dir")
    if args.object:
        scene = load_object(args.object)
    else:
        scene = build_scene(cfg, seed=stage_seed(cfg.seed, "scene"))
    geom = cfg.geometry()
    ds = quantized_aperture_samples(geom)
    count = cfg.count_per_side
    if count is None:
        from .capture import count_for_sar
        count = count_for_sar(cfg.sar_target, cfg.overlap_pct, ds)
    grid = plan_grid(cfg.overlap_pct, count, ds, cfg.grid_size_px)
    cset = capture(scene, grid)
    cset.geometry = geom
    save_capture_set(out, cset, grid=grid, object_field=scene,
                     psi_hat=forward_transform(scene.field),
                     extra={"chart": _chart_extra_or_none(cfg)})
    print(f"captured {len(cset.images)} images "
          f"(step {grid.step}, SAR {grid.sar:.2f}) into {out}")
    return EXIT_OK


def _cmd_noise(args):
    cset = load_capture_set(args.dataset)
    noised = add_noise(cset, args.snr_db, args.seed)
    manifest = load_manifest(args.dataset)
    extra = manifest.get("extra", {})
    grid = manifest.get("aperture_grid")
    scene = None
    if manifest.get("object"):
        scene = load_object(args.dataset)
    save_capture_set(args.out, noised, grid=grid, object_field=scene,
                     extra=extra)
    print(f"noised dataset ({args.snr_db} dB, seed {args.seed}) "
          f"written to {args.out}")
    return EXIT_OK


def _cmd_recon(args):
    cset = load_capture_set(args.dataset)
    mode = args.mode or ("multiplexed" if cset.is_multiplexed else "sequential")
    rcfg = ReconConfig(tau=args.tau, max_iters=args.max_iters,
                       rel_tol=args.rel_tol, mode=mode,
                       precision=args.precision)
    report = reconstruct(cset, rcfg)
    save_recon_artifacts(args.out, report, source=args.dataset,
                         config={"tau": report.tau, "max_iters": rcfg.max_iters,
                                 "rel_tol": rcfg.rel_tol, "mode": rcfg.mode,
                                 "precision": rcfg.precision})
    state = "converged" if report.converged else "max iterations"
    print(f"reconstruction finished after {report.iterations_run} "
          f"iterations ({state}); artifacts in {args.out}")
    return EXIT_OK


def _rebuild_groups(manifest, grid_size):
    chart = (manifest.get("extra") or {}).get("chart")
    if not chart:
        return None
    spec = ResolutionChartSpec(
        grid_size=grid_size, group_widths=tuple(chart["widths"]),
        pairs_per_group=chart["pairs"],
        bar_length_factor=chart["bar_length_factor"],
        padding=chart["padding"], white=chart["white"], black=chart["black"])
    return make_chart(spec).groups


def _cmd_eval(args):
    manifest = load_manifest(args.dataset)
    truth = load_object(args.dataset).intensity()
    n = manifest["grid_size"]
    if args.recon:
        image = load_recovered_intensity(args.recon)
        label = args.id or "recon"
    else:
        cset = load_capture_set(args.dataset)
        image = sensor_to_object(cset.images[0].astype(np.float64))
        label = args.id or "center-capture"
    rows = []
    groups = _rebuild_groups(manifest, n)
    if groups:
        records = group_contrasts(image, groups)
        rows += [(label, "contrast", r.width, r.contrast) for r in records]
        rows.append((label, "mtf20_limit_px", None, mtf20_limit(records)))
    rows.append((label, "intensity_rmse", None, intensity_rmse(image, truth)))
    rows.append((label, "brightness_scale", None, brightness_fit(image, truth)))
    write_metrics_csv(args.out, rows)
    print(f"metrics for {label} written to {args.out}")
    return EXIT_OK


def _cmd_sweep(args):
    cfg = _load_config(args)
    result = run(cfg, out_dir=args.out, workers=args.workers)
    print(f"sweep complete: {len(result.points)} points, "
          f"metrics in {result.csv_path}")
    return EXIT_OK


def _cmd_describe(args):
    print(describe_dataset(args.dataset))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ptychosim",
        description="Simulate and reconstruct synthetic-aperture "
                    "Fourier-ptychography captures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scene", help="generate a ground-truth object dataset")
    _add_config_flags(p)
    p.add_argument("--out", help="output dataset directory")
    p.set_defaults(func=_cmd_scene)

    p = sub.add_parser("capture", help="simulate a capture set")
    _add_config_flags(p)
    p.add_argument("--object", help="reuse a stored object dataset")
    p.add_argument("--out", help="output dataset directory")
    p.set_defaults(func=_cmd_capture)

    p = sub.add_parser("noise", help="add sensor noise to a capture set")
    p.add_argument("--dataset", required=True)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_noise)

    p = sub.add_parser("recon", help="reconstruct a capture set")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--rel-tol", type=float, default=1e-5)
    p.add_argument("--mode", choices=["sequential", "multiplexed"], default=None)
    p.add_argument("--precision", choices=["double", "single"], default="double")
    p.set_defaults(func=_cmd_recon)

    p = sub.add_parser("eval", help="score a reconstruction (or the center capture)")
    p.add_argument("--dataset", required=True)
    p.add_argument("--recon", help="reconstruction artifact directory")
    p.add_argument("--id", help="experiment id for the CSV rows")
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="run a config end to end (single point or sweep)")
    _add_config_flags(p)
    p.add_argument("--out", help="output directory (defaults to output_dir)")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel worker processes for sweep points")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("describe", help="summarize a dataset directory")
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=_cmd_describe)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, GeometryError, DimensionError, LayoutError) as exc:
        print(f"invalid request: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ChecksumError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
