"""Stain-channel decomposition, loss kernels, and HER2-level evaluation."""

from .fusion import (
    FusionBlock,
    ModConvParams,
    demodulate_weights,
    fusion_block_forward,
    fusion_block_from_tensors,
    leaky_relu,
    mod_conv2d,
    read_tensor_file,
    simam,
    write_tensor_file,
)
from .her2 import (
    FeatureLibrary,
    FeatureRecord,
    accuracy_report,
    knn_accuracy,
    knn_classify,
    load_feature_library,
    load_feature_records,
    nearest_neighbors,
    topk_accuracy,
)
from .images import DEFAULT_EPS, HedImage, RgbImage, clamp_for_od, load_image, save_image
from .losses import (
    LossBreakdown,
    LossWeights,
    cosine_similarity_loss,
    focal_loss,
    l1_loss,
    multiscale_gan_loss,
    overall_loss,
    patch_gan_loss,
    ssim_loss,
)
from .metrics import MetricReport, SsimParams, compute_report, mae, psnr, ssim
from .separation import (
    RUIFROK_HDAB,
    ChannelSelector,
    StainBasis,
    StainChannel,
    default_basis,
    destain,
    extract_dab,
    hed_to_rgb,
    isolate_channel,
    load_basis,
    project_stains,
    pseudo_inverse,
    rgb_to_hed,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_EPS",
    "RUIFROK_HDAB",
    "ChannelSelector",
    "FeatureLibrary",
    "FeatureRecord",
    "FusionBlock",
    "HedImage",
    "LossBreakdown",
    "LossWeights",
    "MetricReport",
    "ModConvParams",
    "RgbImage",
    "SsimParams",
    "StainBasis",
    "StainChannel",
    "accuracy_report",
    "clamp_for_od",
    "compute_report",
    "cosine_similarity_loss",
    "default_basis",
    "demodulate_weights",
    "destain",
    "extract_dab",
    "focal_loss",
    "fusion_block_forward",
    "fusion_block_from_tensors",
    "hed_to_rgb",
    "isolate_channel",
    "knn_accuracy",
    "knn_classify",
    "l1_loss",
    "leaky_relu",
    "load_basis",
    "load_feature_library",
    "load_feature_records",
    "load_image",
    "mae",
    "mod_conv2d",
    "multiscale_gan_loss",
    "nearest_neighbors",
    "overall_loss",
    "patch_gan_loss",
    "project_stains",
    "pseudo_inverse",
    "psnr",
    "read_tensor_file",
    "rgb_to_hed",
    "save_image",
    "simam",
    "ssim",
    "ssim_loss",
    "topk_accuracy",
    "write_tensor_file",
]
