"""Stain-channel separation via optical-density color-space transforms.

A pixel row-vector m of log intensities relates to per-stain concentrations
through a 3x3 basis matrix whose rows are the optical-density vectors of
Hematoxylin, Eosin, and DAB. Transforming to stain space, zeroing the
channels not retained, and transforming back isolates a single stain:

    result = exp((log m) . p_inv . Q . p)

with Q the diagonal selector matrix. All pixel math uses the row-vector
convention (vectors multiply matrices from the left).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .images import DEFAULT_EPS, HedImage, RgbImage, _check_eps

#: Ruifrok-Johnston optical-density vectors for H&E-DAB deconvolution,
#: rows = Hematoxylin, Eosin, DAB.
RUIFROK_HDAB = (
    (0.65, 0.70, 0.29),
    (0.07, 0.99, 0.11),
    (0.27, 0.57, 0.78),
)

#: Determinant threshold below which exact inversion falls back to the
#: SVD-based pseudo-inverse.
_SINGULAR_DET = 1e-9


class StainChannel(IntEnum):
    HEMATOXYLIN = 0
    EOSIN = 1
    DAB = 2


#: CLI channel names mapped to retained-channel sets.
CHANNEL_NAMES = {
    "H": frozenset({StainChannel.HEMATOXYLIN}),
    "E": frozenset({StainChannel.EOSIN}),
    "DAB": frozenset({StainChannel.DAB}),
    "HE": frozenset({StainChannel.HEMATOXYLIN, StainChannel.EOSIN}),
    "HDAB": frozenset({StainChannel.HEMATOXYLIN, StainChannel.DAB}),
    "ALL": frozenset(StainChannel),
}


def pseudo_inverse(p: np.ndarray) -> np.ndarray:
    """Moore-Penrose inverse of a 3x3 matrix.

    Invertible matrices (|det| > 1e-9) get the exact inverse; singular ones
    fall back to the SVD-based pseudo-inverse, so the operation is total.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {p.shape}")
    if np.any(np.isnan(p)):
        raise ValueError("matrix entries must not be NaN")
    if abs(np.linalg.det(p)) > _SINGULAR_DET:
        return np.linalg.inv(p)
    return np.linalg.pinv(p)


@dataclass(frozen=True)
class ChannelSelector:
    """The subset of stain channels an isolation retains.

    Realizes the diagonal matrix Q with ones at retained channel indices.
    The empty selector is constructible but rejected by ``isolate_channel``.
    """

    retained: frozenset[StainChannel]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "retained", frozenset(StainChannel(c) for c in self.retained)
        )

    @classmethod
    def from_name(cls, name: str) -> "ChannelSelector":
        """Build a selector from a channel name: H, E, DAB, HE, HDAB, or ALL."""
        key = name.upper()
        if key not in CHANNEL_NAMES:
            raise ValueError(
                f"unknown channel name {name!r}; expected one of {sorted(CHANNEL_NAMES)}"
            )
        return cls(CHANNEL_NAMES[key])

    def q_matrix(self) -> np.ndarray:
        q = np.zeros((3, 3))
        for c in self.retained:
            q[c, c] = 1.0
        return q


@dataclass(frozen=True)
class StainBasis:
    """A 3x3 stain matrix (rows = H, E, DAB optical-density vectors) and its inverse."""

    p: np.ndarray
    p_inv: np.ndarray

    def __post_init__(self) -> None:
        p = np.array(self.p, dtype=np.float64, copy=True)
        p_inv = np.array(self.p_inv, dtype=np.float64, copy=True)
        if p.shape != (3, 3) or p_inv.shape != (3, 3):
            raise ValueError("stain basis matrices must be 3x3")
        if np.abs(p @ p_inv - np.eye(3)).max() > 1e-10:
            raise ValueError("p_inv is not an inverse of p (basis must be invertible)")
        p.flags.writeable = False
        p_inv.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "p_inv", p_inv)

    @classmethod
    def from_matrix(cls, p: np.ndarray) -> "StainBasis":
        return cls(p=np.asarray(p, dtype=np.float64), p_inv=pseudo_inverse(p))

    def projection(self, sel: ChannelSelector) -> np.ndarray:
        """The idempotent row-space projector p_inv . Q . p."""
        return self.p_inv @ sel.q_matrix() @ self.p


_DEFAULT_BASIS: StainBasis | None = None


def default_basis() -> StainBasis:
    """The shared basis built from the Ruifrok-Johnston H&E-DAB matrix."""
    global _DEFAULT_BASIS
    if _DEFAULT_BASIS is None:
        _DEFAULT_BASIS = StainBasis.from_matrix(np.array(RUIFROK_HDAB))
    return _DEFAULT_BASIS


def load_basis(path: str | Path) -> StainBasis:
    """Read a basis override: a JSON file holding 9 numbers, row-major."""
    with open(path, "r", encoding="utf-8") as fh:
        values = json.load(fh)
    if not isinstance(values, list) or len(values) != 9:
        raise ValueError(f"basis file must hold a flat JSON list of 9 numbers: {path}")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise ValueError(f"basis file entries must be numbers: {path}")
    return StainBasis.from_matrix(np.array(values, dtype=np.float64).reshape(3, 3))


def rgb_to_hed(
    img: RgbImage, basis: StainBasis | None = None, eps: float = DEFAULT_EPS
) -> HedImage:
    """Transform RGB intensities to stain concentrations.

    Per pixel: concentrations = log(max(rgb, eps)) . p_inv. Natural log;
    concentrations are unbounded and never clipped.
    """
    _check_eps(eps)
    basis = basis or default_basis()
    return HedImage(np.log(np.maximum(img.data, eps)) @ basis.p_inv)


def hed_to_rgb(hed: HedImage, basis: StainBasis | None = None) -> RgbImage:
    """Transform stain concentrations back to RGB, clipping to [0, 1] after exp."""
    basis = basis or default_basis()
    return RgbImage(np.clip(np.exp(hed.data @ basis.p), 0.0, 1.0))


def project_stains(
    img: RgbImage,
    sel: ChannelSelector,
    basis: StainBasis | None = None,
    eps: float = DEFAULT_EPS,
) -> np.ndarray:
    """Unclipped single-pass isolation: exp(log(max(rgb, eps)) . p_inv . Q . p).

    Values may exceed 1 where concentrations of retained channels are
    negative. Isolations over complementary selectors multiply elementwise
    to the clamped input, since the projectors sum to the identity.
    """
    if not sel.retained:
        raise ValueError("selector retains no channel")
    _check_eps(eps)
    basis = basis or default_basis()
    m = np.log(np.maximum(img.data, eps))
    return np.exp(m @ basis.projection(sel))


def isolate_channel(
    img: RgbImage,
    sel: ChannelSelector,
    basis: StainBasis | None = None,
    eps: float = DEFAULT_EPS,
) -> RgbImage:
    """Retain the selected stain channels of an image, zeroing the others.

    Output is clipped to [0, 1] after the final exponential; stain space
    itself is never clipped. Idempotent per selector.
    """
    return RgbImage(np.clip(project_stains(img, sel, basis, eps), 0.0, 1.0))


def destain(img: RgbImage) -> RgbImage:
    """Reduce an H&E image to its Hematoxylin channel (default basis and eps)."""
    return isolate_channel(img, ChannelSelector.from_name("H"))


def extract_dab(img: RgbImage) -> RgbImage:
    """Reduce an IHC image to its DAB channel (default basis and eps)."""
    return isolate_channel(img, ChannelSelector.from_name("DAB"))
