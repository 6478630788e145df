"""Deterministic forward kernels of the feature-fusion block.

Tensors are float64 numpy arrays in (batch, channels, height, width) layout.
The block composes two style-modulated convolutions with LeakyReLU, a
parameter-free attention gate, and a residual connection:

    y = attention(leaky_relu(mod_conv(leaky_relu(mod_conv(x, p1)), p2))) + x

Convolutions are stride-1 cross-correlations with zero same-padding so the
residual addition always type-checks. No training or autodiff here; weights
arrive precomputed, optionally from the flat tensor-file container below.

Tensor file container: a 4-byte little-endian uint32 header length, a UTF-8
JSON header ``{"tensors": [{"name": ..., "shape": [...]}, ...]}``, then the
concatenated row-major float64 little-endian payloads in header order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

#: Stabilizer inside the demodulation square root.
DEFAULT_DEMOD_EPS = 1e-8

#: Energy-term stabilizer of the attention gate.
DEFAULT_ATTENTION_LAMBDA = 1e-4

#: Negative slope of LeakyReLU, the GAN-generator norm.
LEAKY_SLOPE = 0.2


def _check_tensor4(x: np.ndarray, name: str = "input") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4:
        raise ValueError(f"{name} must be a (batch, channels, height, width) tensor")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    return x


@dataclass(frozen=True)
class ModConvParams:
    """Weights of one style-modulated convolution.

    weight: (out_ch, in_ch, kh, kw) with odd spatial dims; style: one scale
    per input channel (the class-conditioning vector); bias: optional per
    output channel.
    """

    weight: np.ndarray
    style: np.ndarray
    bias: np.ndarray | None = None
    eps: float = DEFAULT_DEMOD_EPS

    def __post_init__(self) -> None:
        weight = np.asarray(self.weight, dtype=np.float64)
        style = np.asarray(self.style, dtype=np.float64)
        if weight.ndim != 4:
            raise ValueError("weight must be (out_ch, in_ch, kh, kw)")
        if weight.shape[2] % 2 == 0 or weight.shape[3] % 2 == 0:
            raise ValueError("kernel spatial dims must be odd")
        if style.shape != (weight.shape[1],):
            raise ValueError(
                f"style length {style.shape} must match in_ch {weight.shape[1]}"
            )
        bias = self.bias
        if bias is not None:
            bias = np.asarray(bias, dtype=np.float64)
            if bias.shape != (weight.shape[0],):
                raise ValueError("bias must have one entry per output channel")
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "style", style)
        object.__setattr__(self, "bias", bias)

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]


def demodulate_weights(params: ModConvParams) -> np.ndarray:
    """Scale the kernel per input channel by (style + 1), then renormalize.

    Each output channel is divided by the L2 norm of its modulated slice
    (summed over input channel and kernel positions) stabilized by eps, so
    per-output-channel norms come out at 1 whenever the modulated norm
    dominates sqrt(eps).
    """
    modulated = params.weight * (params.style + 1.0)[None, :, None, None]
    denom = np.sqrt((modulated**2).sum(axis=(1, 2, 3), keepdims=True) + params.eps)
    return modulated / denom


def mod_conv2d(x: np.ndarray, params: ModConvParams) -> np.ndarray:
    """Convolve with demodulated weights: same-padded stride-1 cross-correlation."""
    x = _check_tensor4(x)
    if x.shape[1] != params.in_channels:
        raise ValueError(
            f"input has {x.shape[1]} channels, kernel expects {params.in_channels}"
        )
    kh, kw = params.weight.shape[2], params.weight.shape[3]
    if x.shape[2] < kh or x.shape[3] < kw:
        raise ValueError("spatial dims must be at least the kernel dims")
    weights = demodulate_weights(params)
    padded = np.pad(x, ((0, 0), (0, 0), (kh // 2, kh // 2), (kw // 2, kw // 2)))
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))
    out = np.einsum("bchwij,ocij->bohw", windows, weights)
    if params.bias is not None:
        out = out + params.bias[None, :, None, None]
    return out


def simam(x: np.ndarray, attention_lambda: float = DEFAULT_ATTENTION_LAMBDA) -> np.ndarray:
    """Parameter-free attention: scale each element by a sigmoid energy gate.

    Per channel plane with mean mu and variance v = sum((x - mu)^2) / (n - 1):

        y = x * sigmoid((x - mu)^2 / (4 (v + lambda)) + 0.5)

    The gate argument is always >= 0.5, so gates lie in (sigmoid(0.5), 1]
    and the sign pattern of x is preserved.
    """
    x = _check_tensor4(x)
    if attention_lambda <= 0.0:
        raise ValueError("attention_lambda must be positive")
    n = x.shape[2] * x.shape[3]
    if n < 2:
        raise ValueError("channel planes need >= 2 pixels for a variance")
    mu = x.mean(axis=(2, 3), keepdims=True)
    dev2 = (x - mu) ** 2
    var = dev2.sum(axis=(2, 3), keepdims=True) / (n - 1)
    energy = dev2 / (4.0 * (var + attention_lambda)) + 0.5
    return x / (1.0 + np.exp(-energy))


def leaky_relu(x: np.ndarray, negative_slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(x >= 0.0, x, negative_slope * x)


@dataclass(frozen=True)
class FusionBlock:
    """Two modulated convolutions plus the attention gate's lambda."""

    conv1: ModConvParams
    conv2: ModConvParams
    attention_lambda: float = DEFAULT_ATTENTION_LAMBDA

    def __post_init__(self) -> None:
        if self.conv1.out_channels != self.conv2.in_channels:
            raise ValueError("conv1 output channels must feed conv2 input channels")
        if self.attention_lambda <= 0.0:
            raise ValueError("attention_lambda must be positive")


def fusion_block_forward(
    x: np.ndarray, block: FusionBlock, style: np.ndarray | None = None
) -> np.ndarray:
    """Run one residual fusion block forward.

    When ``style`` is given it replaces the style vector of both
    convolutions (the conditioning vector is shared across a block).
    """
    x = _check_tensor4(x)
    p1, p2 = block.conv1, block.conv2
    if style is not None:
        style = np.asarray(style, dtype=np.float64)
        p1 = replace(p1, style=style)
        p2 = replace(p2, style=style)
    hidden = leaky_relu(mod_conv2d(x, p1))
    hidden = leaky_relu(mod_conv2d(hidden, p2))
    gated = simam(hidden, block.attention_lambda)
    if gated.shape != x.shape:
        raise ValueError(
            f"residual shapes differ: block yields {gated.shape}, input is {x.shape}"
        )
    return gated + x


def write_tensor_file(path: str | Path, tensors: dict[str, np.ndarray]) -> None:
    """Serialize named float64 arrays to the flat binary container."""
    entries = []
    payload = bytearray()
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype=np.float64)
        entries.append({"name": str(name), "shape": list(arr.shape)})
        payload += arr.astype("<f8").tobytes()  # C-order little-endian
    header = json.dumps({"tensors": entries}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(bytes(payload))


def read_tensor_file(path: str | Path) -> dict[str, np.ndarray]:
    """Load named arrays back from the flat binary container."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise ValueError(f"truncated tensor file: {path}")
    (header_len,) = struct.unpack("<I", raw[:4])
    if len(raw) < 4 + header_len:
        raise ValueError(f"truncated tensor header: {path}")
    header = json.loads(raw[4 : 4 + header_len].decode("utf-8"))
    offset = 4 + header_len
    tensors: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(int(d) for d in entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(raw):
            raise ValueError(f"truncated tensor payload: {path}")
        tensors[entry["name"]] = np.frombuffer(
            raw, dtype="<f8", count=count, offset=offset
        ).reshape(shape)
        offset = end
    if offset != len(raw):
        raise ValueError(f"trailing bytes after tensor payload: {path}")
    return tensors


def fusion_block_from_tensors(
    tensors: dict[str, np.ndarray],
    attention_lambda: float = DEFAULT_ATTENTION_LAMBDA,
    eps: float = DEFAULT_DEMOD_EPS,
) -> FusionBlock:
    """Assemble a block from container arrays named conv{1,2}.{weight,style,bias}."""
    convs = []
    for prefix in ("conv1", "conv2"):
        try:
            weight = tensors[f"{prefix}.weight"]
            style = tensors[f"{prefix}.style"]
        except KeyError as missing:
            raise ValueError(f"tensor container lacks {missing.args[0]}") from None
        convs.append(
            ModConvParams(
                weight=weight,
                style=style,
                bias=tensors.get(f"{prefix}.bias"),
                eps=eps,
            )
        )
    return FusionBlock(conv1=convs[0], conv2=convs[1], attention_lambda=attention_lambda)
