import os

import numpy as np
import pytest

from ptychosim.cli import main
from ptychosim.config import parse_config, parse_config_text
from ptychosim.errors import ConfigError

TINY_CFG = """
# desk-scale smoke configuration
grid_size_px = 64
aperture_diameter_mm = 1.3965
object_extent_mm = 64
pixel_pitch_um = 16
chart_widths_px = 8,6,4
chart_pairs = 1
chart_bar_length_factor = 2
chart_padding_px = 2
count_per_side = 3
overlap_pct = 50
snr_db = 25
recon_max_iters = 30
recon_precision = single
seed = 99
"""


class TestConfigParsing:
    def test_defaults_validate(self):
        cfg = parse_config_text("")
        assert cfg.grid_size_px == 256
        assert cfg.geometry().grid_size == 256

    def test_values_parsed(self, tmp_path):
        p = tmp_path / "exp.cfg"
        p.write_text(TINY_CFG)
        cfg = parse_config(p)
        assert cfg.grid_size_px == 64
        assert cfg.chart_widths_px == (8, 6, 4)
        assert cfg.snr_db == 25.0
        assert cfg.seed == 99

    def test_unknown_key_line_anchored(self, tmp_path):
        p = tmp_path / "exp.cfg"
        p.write_text("grid_size_px = 64\nbogus_key = 1\n")
        with pytest.raises(ConfigError, match=r"exp.cfg:2"):
            parse_config(p)

    def test_bad_value_line_anchored(self):
        with pytest.raises(ConfigError, match=r"<config>:1"):
            parse_config_text("grid_size_px = many")

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config_text("grid_size_px 64")

    def test_off_sentinel_disables_noise(self):
        cfg = parse_config_text("snr_db = off")
        assert cfg.snr_db is None

    def test_sweep_needs_values(self):
        with pytest.raises(ConfigError, match="sweep_values"):
            parse_config_text("sweep_axis = overlap")

    def test_multiplex_sweep_value_format(self):
        with pytest.raises(ConfigError, match="n_mux:T"):
            parse_config_text("sweep_axis = multiplex\nsweep_values = 4x3")

    def test_image_scene_requires_existing_file(self):
        with pytest.raises(ConfigError, match="image_path"):
            parse_config_text("scene_kind = image")

    def test_inconsistent_geometry_rejected(self):
        with pytest.raises(ConfigError, match="geometry"):
            parse_config_text("pixel_pitch_um = 11")

    def test_paper_scale_overlay(self):
        cfg = parse_config_text("", paper_scale=True)
        assert cfg.grid_size_px == 512
        assert cfg.aperture_diameter_mm == 18.0
        assert cfg.chart_widths_px[0] == 20 and cfg.chart_widths_px[-1] == 1

    def test_overrides_beat_file_and_overlay(self):
        cfg = parse_config_text("grid_size_px = 128",
                                overrides={"grid_size_px": "64",
                                           "pixel_pitch_um": "16"})
        assert cfg.grid_size_px == 64


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text(TINY_CFG)
    return str(p)


class TestCliPipeline:
    def test_capture_describe_noise_recon_eval(self, tmp_path, cfg_file, capsys):
        ds = str(tmp_path / "ds")
        assert main(["capture", "--config", cfg_file, "--out", ds]) == 0
        assert main(["describe", "--dataset", ds]) == 0
        out = capsys.readouterr().out
        assert "images: 9" in out

        nz = str(tmp_path / "noised")
        assert main(["noise", "--dataset", ds, "--snr-db", "20",
                     "--seed", "4", "--out", nz]) == 0
        rec = str(tmp_path / "recon")
        assert main(["recon", "--dataset", nz, "--out", rec,
                     "--max-iters", "30", "--precision", "single"]) == 0
        csv = str(tmp_path / "m.csv")
        assert main(["eval", "--dataset", nz, "--recon", rec,
                     "--out", csv, "--id", "smoke"]) == 0
        text = open(csv).read()
        assert text.startswith("experiment_id,metric,group_width,value")
        assert "smoke,contrast,8," in text
        assert "intensity_rmse" in text

    def test_scene_subcommand_writes_object(self, tmp_path, cfg_file):
        out = str(tmp_path / "obj")
        assert main(["scene", "--config", cfg_file, "--out", out]) == 0
        from ptychosim.dataset import load_object
        obj = load_object(out)
        assert obj.field.grid_size == 64

    def test_capture_from_stored_object_matches_inline(self, tmp_path, cfg_file):
        obj_dir = str(tmp_path / "obj")
        main(["scene", "--config", cfg_file, "--out", obj_dir])
        a = str(tmp_path / "a")
        b = str(tmp_path / "b")
        main(["capture", "--config", cfg_file, "--out", a])
        main(["capture", "--config", cfg_file, "--object", obj_dir, "--out", b])
        from ptychosim.dataset import load_capture_set
        assert np.array_equal(load_capture_set(a).images,
                              load_capture_set(b).images)

    def test_config_error_exit_code(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("bogus = 1")
        assert main(["capture", "--config", str(p), "--out", str(tmp_path / "x")]) == 2

    def test_io_error_exit_code(self, tmp_path):
        assert main(["describe", "--dataset", str(tmp_path / "missing")]) == 4

    def test_flag_overrides(self, tmp_path, cfg_file):
        ds = str(tmp_path / "ds5")
        assert main(["capture", "--config", cfg_file, "--count-per-side", "2",
                     "--out", ds]) == 0
        from ptychosim.dataset import load_capture_set
        assert len(load_capture_set(ds).images) == 4


class TestSweepRuns:
    def test_single_point_run_and_deterministic_csv(self, tmp_path, cfg_file):
        out1 = str(tmp_path / "run1")
        out2 = str(tmp_path / "run2")
        assert main(["sweep", "--config", cfg_file, "--out", out1]) == 0
        assert main(["sweep", "--config", cfg_file, "--out", out2]) == 0
        a = open(os.path.join(out1, "metrics.csv"), "rb").read()
        b = open(os.path.join(out2, "metrics.csv"), "rb").read()
        assert a == b
        assert os.path.exists(os.path.join(out1, "run_manifest.json"))
        assert os.path.exists(os.path.join(out1, "single", "dataset",
                                           "manifest.json"))
        assert os.path.exists(os.path.join(out1, "single", "recon",
                                           "manifest.json"))

    def test_overlap_sweep_points(self, tmp_path, cfg_file):
        out = str(tmp_path / "sweep")
        rc = main(["sweep", "--config", cfg_file, "--out", out,
                   "--sweep-axis", "overlap", "--sweep-values", "0,50",
                   "--sar-target", "2", "--count-per-side", "none",
                   "--recon-max-iters", "10"])
        assert rc == 0
        text = open(os.path.join(out, "metrics.csv")).read()
        assert "overlap0," in text and "overlap50," in text
        assert "sar," in text

    def test_multiplex_run_via_config(self, tmp_path):
        p = tmp_path / "mux.cfg"
        p.write_text(TINY_CFG + "\nrecon_mode = multiplexed\n"
                     "mux_cameras_per_side = 2\nmux_sources_per_side = 2\n"
                     "mux_camera_diameter_samples = 12\n"
                     "mux_source_overlap_pct = 50\n"
                     "mux_n_active = 2\nmux_patterns_t = 2\nsnr_db = off\n")
        out = str(tmp_path / "muxrun")
        assert main(["sweep", "--config", str(p), "--out", out]) == 0
        text = open(os.path.join(out, "metrics.csv")).read()
        assert "single,image_count,,8.0" in text
