"""Loss kernels for stain-transfer training, with analytic gradients.

Every kernel is a pure function returning plain floats and arrays, so any
trainer can consume them and each formula is testable in isolation. The
overall objective is a two-level weighted sum:

    total   = w_stain * stain + w_content * content + w_level * level + w_gan * gan
    stain   = w_h * h + w_dab * dab
    content = w_ssim * ssim + w_mae * mae + w_cmp * cmp
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .images import RgbImage
from .metrics import SsimParams, ssim

#: Canonical mode names for the patch GAN objective.
GAN_MODES = ("least-squares", "binary-cross-entropy")


@dataclass(frozen=True)
class LossWeights:
    """The weight constants of the overall loss hierarchy."""

    stain: float = 2.0
    content: float = 13.0
    level: float = 5.0
    gan: float = 1.0
    h: float = 1.0
    dab: float = 1.0
    cmp: float = 2.0
    mae: float = 10.0
    ssim: float = 1.0

    def __post_init__(self) -> None:
        for name, value in self.__dict__.items():
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"weight {name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class LossBreakdown:
    """Components, sub-aggregates, and total of one overall-loss evaluation.

    Constructed by ``overall_loss``, which guarantees total, stain, and
    content are consistent with the weighted-sum hierarchy.
    """

    total: float
    stain: float
    h: float
    dab: float
    content: float
    ssim: float
    mae: float
    cmp: float
    level: float
    gan: float


def cosine_similarity_loss(
    a: np.ndarray, b: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """1 - cos(a, b) with analytic gradients for both vectors.

    The value is scale-invariant and lies in [0, 2]; both gradients are
    orthogonal to their own vector. Zero-norm inputs are rejected rather
    than defaulted, since the limit is undefined.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.size < 1:
        raise ValueError("inputs must be 1-D vectors of dimension >= 1")
    if a.shape != b.shape:
        raise ValueError(f"vector dimensions differ: {a.size} vs {b.size}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    dot = float(a @ b)
    value = 1.0 - dot / (na * nb)
    grad_a = ((dot / na**2) * a - b) / (na * nb)
    grad_b = ((dot / nb**2) * b - a) / (na * nb)
    return value, grad_a, grad_b


def l1_loss(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean absolute difference with its subgradient in the first argument.

    grad = sign(a - b) / N elementwise, with sign(0) = 0. Mean
    normalization keeps values resolution-independent.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shapes differ: {a.shape} vs {b.shape}")
    diff = a - b
    value = float(np.mean(np.abs(diff)))
    grad_a = np.sign(diff) / diff.size
    return value, grad_a


def ssim_loss(
    a: RgbImage | np.ndarray,
    b: RgbImage | np.ndarray,
    params: SsimParams | None = None,
) -> float:
    """1 - SSIM(a, b). Value only; bounded by [0, 2]."""
    return 1.0 - ssim(a, b, params)


def focal_loss(
    probs: np.ndarray, target: int, alpha: float = 1.0, gamma: float = 2.0
) -> tuple[float, np.ndarray]:
    """Class-imbalance-weighted cross-entropy on post-softmax probabilities.

    value = -alpha * (1 - p_t)^gamma * log(p_t) with p_t = probs[target].
    At gamma = 0 this reduces to plain cross-entropy. The gradient with
    respect to probs is nonzero only at the target index.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1 or probs.size < 2:
        raise ValueError("probs must be a 1-D vector of >= 2 class probabilities")
    if not isinstance(target, (int, np.integer)) or not 0 <= target < probs.size:
        raise ValueError(f"target must be a class index in 0..{probs.size - 1}")
    if gamma < 0.0:
        raise ValueError("gamma must be nonnegative")
    if np.any(probs < 0.0) or np.any(probs > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    if abs(float(probs.sum()) - 1.0) > 1e-6:
        raise ValueError(f"probabilities must sum to 1, got {probs.sum()}")
    p_t = float(probs[target])
    if p_t <= 0.0:
        raise ValueError("target probability must be positive")

    log_p = math.log(p_t)
    value = -alpha * (1.0 - p_t) ** gamma * log_p
    if gamma == 0.0:
        d_target = -alpha / p_t
    elif p_t == 1.0:
        d_target = 0.0  # both terms vanish in the limit
    else:
        d_target = alpha * gamma * (1.0 - p_t) ** (gamma - 1.0) * log_p
        d_target -= alpha * (1.0 - p_t) ** gamma / p_t
    grad = np.zeros_like(probs)
    grad[target] = d_target
    return value, grad


def patch_gan_loss(
    score_map: np.ndarray, target_is_real: bool, mode: str = "least-squares"
) -> float:
    """Adversarial objective averaged over a discriminator's spatial scores.

    least-squares: mean((s - t)^2); binary-cross-entropy:
    mean(-(t log s + (1 - t) log(1 - s))), with t = 1 for real, 0 for fake.
    BCE scores must be probabilities strictly inside (0, 1).
    """
    scores = np.asarray(score_map, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("score map must be non-empty")
    if mode not in GAN_MODES:
        raise ValueError(f"mode must be one of {GAN_MODES}, got {mode!r}")
    t = 1.0 if target_is_real else 0.0
    if mode == "least-squares":
        return float(np.mean((scores - t) ** 2))
    if np.any(scores <= 0.0) or np.any(scores >= 1.0):
        raise ValueError("binary-cross-entropy scores must lie strictly in (0, 1)")
    return float(np.mean(-(t * np.log(scores) + (1.0 - t) * np.log1p(-scores))))


def multiscale_gan_loss(loss_512: float, loss_256: float) -> float:
    """Mean of the patch GAN losses computed at the two resolutions."""
    if not (math.isfinite(loss_512) and math.isfinite(loss_256)):
        raise ValueError("per-resolution losses must be finite")
    return (loss_512 + loss_256) / 2.0


def overall_loss(
    h: float,
    dab: float,
    ssim: float,
    mae: float,
    cmp: float,
    level: float,
    gan: float,
    weights: LossWeights | None = None,
) -> LossBreakdown:
    """Compose component values through the two-level weighted-sum hierarchy."""
    w = weights or LossWeights()
    components = dict(h=h, dab=dab, ssim=ssim, mae=mae, cmp=cmp, level=level, gan=gan)
    for name, value in components.items():
        if not math.isfinite(value):
            raise ValueError(f"component {name} must be finite, got {value}")
    stain = w.h * h + w.dab * dab
    content = w.ssim * ssim + w.mae * mae + w.cmp * cmp
    total = w.stain * stain + w.content * content + w.level * level + w.gan * gan
    return LossBreakdown(
        total=total,
        stain=stain,
        h=h,
        dab=dab,
        content=content,
        ssim=ssim,
        mae=mae,
        cmp=cmp,
        level=level,
        gan=gan,
    )
