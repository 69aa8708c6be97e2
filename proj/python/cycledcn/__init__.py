# Copyright 2026 The cycledcn Authors.
# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the cycledcn denoising library."""

from ._cycledcn import (
    DivergenceError,
    FileFormatError,
    Model,
    ValidationError,
    __version__,
    epi,
    evaluate_case,
    generate_phantom,
    hausdorff,
    load_volume,
    normalize_pair,
    nrmse,
    psnr,
    run_cli,
    save_volume,
    simulate_low_dose,
    ssim,
    update_weights,
)

__all__ = [
    "DivergenceError",
    "FileFormatError",
    "Model",
    "ValidationError",
    "__version__",
    "epi",
    "evaluate_case",
    "generate_phantom",
    "hausdorff",
    "load_volume",
    "normalize_pair",
    "nrmse",
    "psnr",
    "run_cli",
    "save_volume",
    "simulate_low_dose",
    "ssim",
    "update_weights",
]
