"""Image containers, PNG I/O, and numeric hygiene for stain math.

Pixels live as unit-interval float64 internally; 8-bit integers exist only at
file boundaries. Stain transforms take elementwise logarithms, so images
headed into log space must be floored away from zero first (``clamp_for_od``).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

#: Floor applied to intensities before taking logarithms. Keeps |log eps|
#: around 13.8 while perturbing displayable 8-bit pixels by less than 1 LSB.
DEFAULT_EPS = 1e-6


@dataclass(frozen=True)
class RgbImage:
    """An H x W x 3 image of finite intensities in [0, 1].

    The pixel buffer is copied and frozen at construction; instances are
    immutable and safe to share across threads.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected an (H, W, 3) array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must contain at least one pixel")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image intensities must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image intensities must lie in [0, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class HedImage:
    """An H x W x 3 plane of per-stain concentrations (unbounded reals)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected an (H, W, 3) array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("stain concentrations must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def load_image(path: str | Path) -> RgbImage:
    """Read an 8-bit or 16-bit RGB PNG into unit-interval floats.

    Integer samples are mapped to [0, 1] by v / v_max (255 or 65535). An
    alpha channel, if present, is dropped with a warning on stderr; pathology
    scans are opaque.

    Raises:
        FileNotFoundError: path does not name a readable file.
        ValueError: undecodable file, non-RGB channel count, or an
            unsupported sample type.
    """
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such image file: {p}")
    raw = cv2.imread(str(p), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ValueError(f"unsupported or undecodable image file: {p}")
    if raw.ndim != 3:
        raise ValueError(f"expected an RGB image, got {raw.ndim - 1} channel(s): {p}")
    if raw.shape[2] == 4:
        print(f"warning: discarding alpha channel of {p}", file=sys.stderr)
        raw = raw[:, :, :3]
    elif raw.shape[2] != 3:
        raise ValueError(f"expected 3 color channels, got {raw.shape[2]}: {p}")
    if raw.dtype == np.uint8:
        v_max = 255.0
    elif raw.dtype == np.uint16:
        v_max = 65535.0
    else:
        raise ValueError(f"unsupported sample type {raw.dtype}: {p}")
    return RgbImage(raw[:, :, ::-1].astype(np.float64) / v_max)  # BGR -> RGB


def save_image(img: RgbImage, path: str | Path) -> None:
    """Write an 8-bit PNG; samples are quantized as round(v * 255).

    Raises:
        OSError: the path cannot be written.
    """
    samples = np.rint(img.data * 255.0).astype(np.uint8)
    ok = cv2.imwrite(str(path), samples[:, :, ::-1])  # RGB -> BGR
    if not ok:
        raise OSError(f"could not write image file: {path}")


def clamp_for_od(img: RgbImage, eps: float = DEFAULT_EPS) -> RgbImage:
    """Floor every intensity at ``eps`` so the image is safe to log-transform.

    ``eps`` must lie in (0, 0.01]. Idempotent: clamping twice equals
    clamping once exactly.
    """
    _check_eps(eps)
    return RgbImage(np.maximum(img.data, eps))


def _check_eps(eps: float) -> None:
    if not (0.0 < eps <= 0.01):
        raise ValueError(f"eps must lie in (0, 0.01], got {eps}")
