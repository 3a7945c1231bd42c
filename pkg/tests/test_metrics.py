import numpy as np
import pytest

from ptychosim.errors import InputError
from ptychosim.field import OpticalGeometry
from ptychosim.metrics import (ContrastRecord, brightness_fit, contrast,
                               diffraction_calc, group_contrasts,
                               intensity_rmse, mtf20_limit, write_metrics_csv)


def masks(n=8):
    white = np.zeros((n, n), dtype=bool)
    black = np.zeros((n, n), dtype=bool)
    white[:, :2] = True
    black[:, 4:6] = True
    return white, black


class TestContrast:
    def test_perfect_bars(self):
        white, black = masks()
        img = np.where(white, 1.0, 0.0)
        assert contrast(img, white, black) == 1.0

    def test_equal_means_zero(self):
        white, black = masks()
        img = np.full((8, 8), 0.5)
        assert contrast(img, white, black) == 0.0

    def test_mtf20_threshold_arithmetic(self):
        white, black = masks()
        img = np.where(white, 0.6, 0.4)
        assert contrast(img, white, black) == pytest.approx(0.2)

    def test_scale_invariance(self, rng):
        white, black = masks()
        img = rng.random((8, 8)) + 0.1
        c1 = contrast(img, white, black)
        c2 = contrast(7.3 * img, white, black)
        assert c1 == pytest.approx(c2, rel=1e-12)

    def test_both_zero_means_returns_zero(self):
        white, black = masks()
        assert contrast(np.zeros((8, 8)), white, black) == 0.0

    def test_empty_mask_rejected(self):
        white, black = masks()
        with pytest.raises(InputError):
            contrast(np.ones((8, 8)), np.zeros((8, 8), dtype=bool), black)

    def test_overlapping_masks_rejected(self):
        white, _ = masks()
        with pytest.raises(InputError):
            contrast(np.ones((8, 8)), white, white)


def records(values, widths=None):
    widths = widths or list(range(len(values), 0, -1))
    return [ContrastRecord(w, 1 / (2 * w), c) for w, c in zip(widths, values)]


class TestMtf20:
    def test_all_passing_returns_finest(self):
        assert mtf20_limit(records([1.0, 0.9, 0.8])) == 1

    def test_first_crossing_rule(self):
        # ringing can push contrast back above threshold after the first
        # failure; the limit must not jump past it
        recs = records([0.9, 0.5, 0.15, 0.4, 0.1], widths=[12, 10, 8, 6, 4])
        assert mtf20_limit(recs) == 10

    def test_none_passing_is_unresolved(self):
        assert mtf20_limit(records([0.1, 0.05])) is None

    def test_exact_threshold_passes(self):
        assert mtf20_limit(records([0.2], widths=[5])) == 5

    def test_requires_sorted_records(self):
        recs = records([0.9, 0.8], widths=[4, 8])
        with pytest.raises(InputError):
            mtf20_limit(recs)


class TestRmse:
    def test_identical_images_zero(self, rng):
        img = rng.random((16, 16))
        assert intensity_rmse(img, img) == 0.0

    def test_doubled_brightness_fits_to_zero(self, rng):
        truth = rng.random((16, 16))
        assert intensity_rmse(2.0 * truth, truth) == pytest.approx(0.0, abs=1e-12)
        assert brightness_fit(2.0 * truth, truth) == pytest.approx(0.5)

    def test_zero_iff_proportional(self, rng):
        truth = rng.random((16, 16))
        noisy = truth + 0.05 * rng.standard_normal((16, 16))
        assert intensity_rmse(noisy, truth) > 0

    def test_size_mismatch_rejected(self):
        with pytest.raises(InputError):
            intensity_rmse(np.ones((4, 4)), np.ones((5, 5)))

    def test_zero_recovered_gives_truth_rms(self, rng):
        truth = rng.random((8, 8))
        expected = float(np.sqrt(np.mean(truth ** 2)))
        assert intensity_rmse(np.zeros((8, 8)), truth) == pytest.approx(expected)


class TestDiffractionCalc:
    def test_object_blur_one_kilometer_example(self):
        geom = OpticalGeometry(wavelength=550e-9, object_distance=1000.0,
                               focal_length=0.8, aperture_diameter=0.0125,
                               object_extent=64.0,
                               sensor_pixel_pitch=1e-4, grid_size=512)
        blur = diffraction_calc(geom)
        assert blur.object_blur == pytest.approx(0.044, abs=5e-4)

    def test_sensor_spot_prototype_example(self):
        # f = 75 mm, d = 2.3 mm, 633 nm HeNe: ~49-50 um Airy spot diameter
        geom = OpticalGeometry(wavelength=633e-9, object_distance=1.5,
                               focal_length=0.075, aperture_diameter=0.0023,
                               object_extent=0.02,
                               sensor_pixel_pitch=1e-3 / 512, grid_size=512)
        blur = diffraction_calc(geom)
        assert abs(blur.sensor_blur - 49e-6) < 2e-6
        assert blur.rayleigh == pytest.approx(blur.sensor_blur / 2)

    def test_blur_vanishes_for_huge_aperture(self):
        geom = OpticalGeometry(wavelength=550e-9, object_distance=50.0,
                               focal_length=0.8, aperture_diameter=1e6,
                               object_extent=0.064,
                               sensor_pixel_pitch=2e-6, grid_size=512)
        blur = diffraction_calc(geom)
        assert blur.object_blur < 1e-10
        assert blur.sensor_blur < 1e-9

    def test_homogeneous_in_aperture(self):
        base = OpticalGeometry(wavelength=550e-9, object_distance=50.0,
                               focal_length=0.8, aperture_diameter=0.018,
                               object_extent=0.064,
                               sensor_pixel_pitch=2e-6, grid_size=512)
        doubled = OpticalGeometry(wavelength=550e-9, object_distance=50.0,
                                  focal_length=0.8, aperture_diameter=0.036,
                                  object_extent=0.064,
                                  sensor_pixel_pitch=2e-6, grid_size=512)
        a, b = diffraction_calc(base), diffraction_calc(doubled)
        assert b.object_blur == pytest.approx(a.object_blur / 2)
        assert b.sensor_blur == pytest.approx(a.sensor_blur / 2)
        assert b.rayleigh == pytest.approx(a.rayleigh / 2)


class TestCsv:
    def test_rows_and_unresolved_sentinel(self, tmp_path):
        path = tmp_path / "metrics.csv"
        write_metrics_csv(path, [("exp1", "contrast", 8, 0.5),
                                 ("exp1", "mtf20_limit_px", None, None)])
        lines = path.read_text().splitlines()
        assert lines[0] == "experiment_id,metric,group_width,value"
        assert lines[1] == "exp1,contrast,8,0.5"
        assert lines[2] == "exp1,mtf20_limit_px,,unresolved"

    def test_byte_identical_reruns(self, tmp_path, rng):
        rows = [("e", "m", int(w), float(v))
                for w, v in zip(rng.integers(1, 20, 10), rng.random(10))]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_metrics_csv(a, rows)
        write_metrics_csv(b, rows)
        assert a.read_bytes() == b.read_bytes()
