import math

import numpy as np
import pytest

import oracles
from stainkit import MetricReport, RgbImage, SsimParams, compute_report, mae, psnr, ssim


class TestSsim:
    def test_self_similarity(self, rng):
        img = rng.random((16, 16, 3))
        assert abs(ssim(img, img) - 1.0) <= 1e-9

    def test_constant_pair_closed_form(self):
        a = np.full((16, 16, 3), 0.5)
        b = np.full((16, 16, 3), 0.6)
        expected = (0.6 + 1e-4) / (0.61 + 1e-4)
        assert abs(ssim(a, b) - expected) <= 1e-6

    def test_matches_bruteforce_reference(self, rng):
        params = SsimParams()
        for _ in range(3):
            a = rng.random((16, 16, 3))
            b = rng.random((16, 16, 3))
            expected = oracles.ssim_reference(a, b, 11, 1.5, 0.01, 0.03, 1.0)
            assert abs(ssim(a, b, params) - expected) <= 1e-7

    def test_symmetry(self, rng):
        a, b = rng.random((12, 12, 3)), rng.random((12, 12, 3))
        assert ssim(a, b) == ssim(b, a)

    def test_bounds(self, rng):
        for _ in range(5):
            a, b = rng.random((12, 12, 3)), rng.random((12, 12, 3))
            assert -1.0 <= ssim(a, b) <= 1.0

    def test_translation_sensitivity(self, rng):
        a = rng.random((16, 16, 3))
        shifted = np.roll(a, 1, axis=1)
        assert ssim(a, shifted) < 1.0

    def test_rejects_mismatched_shapes(self, rng):
        with pytest.raises(ValueError):
            ssim(rng.random((12, 12, 3)), rng.random((12, 13, 3)))

    def test_rejects_small_images(self, rng):
        with pytest.raises(ValueError):
            ssim(rng.random((8, 8, 3)), rng.random((8, 8, 3)))  # < 11x11 window

    def test_map_shape(self, rng):
        a, b = rng.random((14, 16, 3)), rng.random((14, 16, 3))
        value, ssim_map = ssim(a, b, return_map=True)
        assert ssim_map.shape == (4, 6, 3)
        assert abs(ssim_map.mean() - value) <= 1e-15

    def test_accepts_rgb_image_wrapper(self, rng):
        img = RgbImage(rng.random((12, 12, 3)))
        assert abs(ssim(img, img) - 1.0) <= 1e-9

    def test_params_validated(self):
        for bad in (dict(window_size=4), dict(window_size=1), dict(k1=0.0),
                    dict(gaussian_sigma=0.0), dict(dynamic_range=0.0)):
            with pytest.raises(ValueError):
                SsimParams(**bad)


class TestPsnr:
    def test_identical_is_infinite(self, rng):
        img = rng.random((8, 8, 3))
        assert math.isinf(psnr(img, img))

    def test_uniform_offset_closed_form(self, rng):
        a = rng.uniform(0.0, 0.9, size=(8, 8, 3))
        assert abs(psnr(a, a + 0.1) - 20.0) <= 1e-9

    def test_halving_mse_adds_3dB(self, rng):
        a = rng.random((8, 8, 3))
        noise = rng.normal(size=a.shape)
        one = psnr(a, a + 0.01 * noise)
        two = psnr(a, a + 0.01 * noise / math.sqrt(2.0))
        assert abs((two - one) - 10.0 * math.log10(2.0)) <= 1e-9

    def test_monotone_in_noise_amplitude(self, rng):
        a = rng.random((8, 8, 3))
        noise = rng.normal(size=a.shape)
        values = [psnr(a, a + amp * noise) for amp in (0.01, 0.02, 0.04)]
        assert values[0] > values[1] > values[2]

    def test_symmetry(self, rng):
        a, b = rng.random((8, 8, 3)), rng.random((8, 8, 3))
        assert psnr(a, b) == psnr(b, a)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            psnr(rng.random((4, 4, 3)), rng.random((4, 5, 3)))


class TestMae:
    def test_identical(self, rng):
        img = rng.random((8, 8, 3))
        assert mae(img, img) == 0.0

    def test_constant_offset(self, rng):
        a = rng.uniform(0.0, 0.9, size=(8, 8, 3))
        assert abs(mae(a, a + 0.1) - 0.1) <= 1e-12

    def test_matches_elementwise_sum(self, rng):
        a, b = rng.random((8, 8, 3)), rng.random((8, 8, 3))
        expected = sum(
            abs(float(x) - float(y)) for x, y in zip(a.reshape(-1), b.reshape(-1))
        ) / a.size
        assert abs(mae(a, b) - expected) <= 1e-12

    def test_symmetry_and_nonnegative(self, rng):
        a, b = rng.random((8, 8, 3)), rng.random((8, 8, 3))
        assert mae(a, b) == mae(b, a) >= 0.0


class TestMetricReport:
    def test_report_of_identical_pair(self, rng):
        img = RgbImage(rng.random((12, 12, 3)))
        report = compute_report(img, img)
        assert report.ssim == pytest.approx(1.0, abs=1e-9)
        assert math.isinf(report.psnr_db)
        assert report.mae == 0.0
        assert report.to_json_dict() == {"ssim": report.ssim, "psnr_db": "inf", "mae": 0.0}

    def test_report_of_distinct_pair(self, rng):
        a = RgbImage(rng.random((12, 12, 3)))
        b = RgbImage(rng.random((12, 12, 3)))
        report = compute_report(a, b)
        assert not math.isinf(report.psnr_db)
        assert report.mae > 0.0

    def test_inconsistent_report_rejected(self):
        with pytest.raises(ValueError):
            MetricReport(ssim=1.0, psnr_db=math.inf, mae=0.5)
        with pytest.raises(ValueError):
            MetricReport(ssim=1.0, psnr_db=30.0, mae=0.0)
        with pytest.raises(ValueError):
            MetricReport(ssim=1.5, psnr_db=30.0, mae=0.5)
