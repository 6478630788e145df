"""Thin scripting bindings over the stainkit core for ML pipelines.

Inputs are plain array-likes and row tuples; conversion and validation
happen once at the boundary, then every computation delegates to the core
so results are numerically identical to it. Caller memory is never
mutated: the core copies pixel buffers at construction.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

import numpy as np

import stainkit
from stainkit import (
    ChannelSelector,
    FeatureLibrary,
    FeatureRecord,
    LossWeights,
    RgbImage,
    compute_report,
    isolate_channel,
    overall_loss,
    topk_accuracy,
)

__version__ = stainkit.__version__

#: Channel names the isolation binding accepts.
ISOLATION_CHANNELS = ("H", "E", "DAB", "ALL")

__all__ = [
    "ISOLATION_CHANNELS",
    "py_eval_topk",
    "py_isolate_channel",
    "py_loss",
    "py_metrics",
]


def _as_image(array, name: str) -> RgbImage:
    arr = np.asarray(array, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must be an (H, W, 3) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return RgbImage(arr)


def py_isolate_channel(array, channel: str) -> np.ndarray:
    """Isolate a stain channel of an H x W x 3 unit-interval array.

    ``channel`` is one of H, E, DAB, or ALL. The result is the core
    isolation's float64 buffer, bit for bit.
    """
    if channel not in ISOLATION_CHANNELS:
        raise ValueError(
            f"channel must be one of {ISOLATION_CHANNELS}, got {channel!r}"
        )
    img = _as_image(array, "image")
    return isolate_channel(img, ChannelSelector.from_name(channel)).data


def py_metrics(a, b) -> dict:
    """SSIM / PSNR / MAE between two arrays; PSNR of identical arrays is math.inf."""
    report = compute_report(_as_image(a, "a"), _as_image(b, "b"))
    return {"ssim": report.ssim, "psnr_db": report.psnr_db, "mae": report.mae}


def _records(rows: Iterable, what: str) -> list[FeatureRecord]:
    records = []
    for row in rows:
        try:
            rid, label, vector = row
        except (TypeError, ValueError):
            raise ValueError(f"{what} rows must be (id, label, vector) tuples") from None
        records.append(
            FeatureRecord(id=str(rid), label=int(label), vector=np.asarray(vector, float))
        )
    return records


def py_eval_topk(
    library_rows: Iterable, query_rows: Iterable, ks: Sequence[int]
) -> dict[int, float]:
    """Top-k HER2-level retrieval accuracy over (id, label, vector) rows."""
    library = FeatureLibrary(tuple(_records(library_rows, "library")))
    queries = _records(query_rows, "query")
    return topk_accuracy(library, queries, ks)


def py_loss(
    components: Mapping[str, float], weights: Mapping[str, float] | None = None
) -> dict:
    """Compose loss components through the weighted hierarchy.

    ``components`` maps any of h, dab, ssim, mae, cmp, level, gan to values;
    omitted components come back as None and contribute nothing to the
    total. Output mirrors the CLI loss report.
    """
    names = ("h", "dab", "ssim", "mae", "cmp", "level", "gan")
    unknown = set(components) - set(names)
    if unknown:
        raise ValueError(f"unknown loss components: {sorted(unknown)}")
    w = LossWeights(**dict(weights or {}))
    filled = {n: float(components.get(n, 0.0)) for n in names}
    breakdown = overall_loss(**filled, weights=w)
    report: dict = {
        n: (float(components[n]) if n in components else None) for n in names
    }
    report["stain"] = breakdown.stain
    report["content"] = breakdown.content
    report["total"] = breakdown.total
    return report
