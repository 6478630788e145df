"""Image quality metrics: SSIM, PSNR, and mean absolute error.

SSIM uses Gaussian-weighted windows applied with valid coverage (no padding),
computed per channel and averaged, with the standard constants
window_size=11, sigma=1.5, k1=0.01, k2=0.03 over a unit dynamic range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .images import RgbImage


@dataclass(frozen=True)
class SsimParams:
    window_size: int = 11
    gaussian_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def __post_init__(self) -> None:
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise ValueError("window_size must be odd and >= 3")
        if self.gaussian_sigma <= 0.0:
            raise ValueError("gaussian_sigma must be positive")
        if self.k1 <= 0.0 or self.k2 <= 0.0:
            raise ValueError("k1 and k2 must be positive")
        if self.dynamic_range <= 0.0:
            raise ValueError("dynamic_range must be positive")


@dataclass(frozen=True)
class MetricReport:
    """One comparison's metric triple; psnr_db is math.inf for identical images."""

    ssim: float
    psnr_db: float
    mae: float

    def __post_init__(self) -> None:
        if not -1.0 <= self.ssim <= 1.0:
            raise ValueError(f"ssim out of [-1, 1]: {self.ssim}")
        if self.mae < 0.0:
            raise ValueError(f"mae must be nonnegative: {self.mae}")
        if (self.mae == 0.0) != math.isinf(self.psnr_db):
            raise ValueError("psnr is infinite exactly when mae is zero")

    def to_json_dict(self) -> dict:
        psnr = "inf" if math.isinf(self.psnr_db) else self.psnr_db
        return {"ssim": self.ssim, "psnr_db": psnr, "mae": self.mae}


def _as_array(img) -> np.ndarray:
    if isinstance(img, (RgbImage,)):
        return img.data
    return np.asarray(img, dtype=np.float64)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    # 1-D profile whose outer product is the unit-sum 2-D window
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return w / w.sum()  # outer(w, w) then sums to 1


def _correlate_valid(plane: np.ndarray, w: np.ndarray) -> np.ndarray:
    # separable valid-mode correlation with the unit-sum Gaussian window
    t = sliding_window_view(plane, len(w), axis=1) @ w
    return sliding_window_view(t, len(w), axis=0) @ w


def ssim(
    a: RgbImage | np.ndarray,
    b: RgbImage | np.ndarray,
    params: SsimParams | None = None,
    return_map: bool = False,
):
    """Mean structural similarity between two same-size images.

    Per channel and valid window position:

        ((2 mu_a mu_b + C1) (2 cov_ab + C2))
        / ((mu_a^2 + mu_b^2 + C1) (var_a + var_b + C2))

    with C1 = (k1 L)^2 and C2 = (k2 L)^2, means/variances Gaussian-weighted.
    Returns the grand mean, or (mean, map) with the per-window map of shape
    (H - w + 1, W - w + 1, channels) when ``return_map`` is set.
    """
    params = params or SsimParams()
    x = _as_array(a)
    y = _as_array(b)
    if x.shape != y.shape:
        raise ValueError(f"image dimensions differ: {x.shape} vs {y.shape}")
    win = params.window_size
    if x.shape[0] < win or x.shape[1] < win:
        raise ValueError(f"image smaller than the {win}x{win} window: {x.shape}")
    if x.ndim == 2:
        x = x[:, :, None]
        y = y[:, :, None]

    w = _gaussian_window(win, params.gaussian_sigma)
    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2

    maps = []
    for ch in range(x.shape[2]):
        xa, yb = x[:, :, ch], y[:, :, ch]
        mu_a = _correlate_valid(xa, w)
        mu_b = _correlate_valid(yb, w)
        var_a = _correlate_valid(xa * xa, w) - mu_a * mu_a
        var_b = _correlate_valid(yb * yb, w) - mu_b * mu_b
        cov = _correlate_valid(xa * yb, w) - mu_a * mu_b
        num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
        den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
        maps.append(num / den)
    ssim_map = np.stack(maps, axis=-1)
    value = float(ssim_map.mean())
    if return_map:
        return value, ssim_map
    return value


def psnr(
    a: RgbImage | np.ndarray, b: RgbImage | np.ndarray, dynamic_range: float = 1.0
) -> float:
    """Peak signal-to-noise ratio in dB; math.inf for identical images."""
    x = _as_array(a)
    y = _as_array(b)
    if x.shape != y.shape:
        raise ValueError(f"image dimensions differ: {x.shape} vs {y.shape}")
    if dynamic_range <= 0.0:
        raise ValueError("dynamic_range must be positive")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(dynamic_range**2 / mse)


def mae(a: RgbImage | np.ndarray, b: RgbImage | np.ndarray) -> float:
    """Mean absolute difference over all elements."""
    x = _as_array(a)
    y = _as_array(b)
    if x.shape != y.shape:
        raise ValueError(f"shapes differ: {x.shape} vs {y.shape}")
    return float(np.mean(np.abs(x - y)))


def compute_report(
    a: RgbImage | np.ndarray,
    b: RgbImage | np.ndarray,
    params: SsimParams | None = None,
) -> MetricReport:
    """All three metrics for one image pair."""
    params = params or SsimParams()
    return MetricReport(
        ssim=ssim(a, b, params),
        psnr_db=psnr(a, b, params.dynamic_range),
        mae=mae(a, b),
    )
