"""Difference-image generation via distance-weighted pooling.

The dissimilarity map between two co-registered acquisitions is built in
three steps: both inputs are smoothed once with a small distance-weighted
pooling kernel, their absolute log-ratio is taken, and that log-ratio is
pooled again at a ladder of growing window sizes whose normalized outputs
are averaged. The result suppresses isolated speckle outliers while
keeping spatially aggregated real changes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .raster import as_image

# 8-bit inputs may contain exact zeros; SAR intensities are assumed positive,
# so pixels are floored here before any division or log.
RATIO_EPS = 1e-6


@dataclass(frozen=True)
class PoolKernel:
    """k x k pooling weights decaying with distance from the window center.

    Off-center weight at 1-based position (i, j) is 1 / (k^2 * d) with d the
    Euclidean distance to the center; the center element itself is 2 / k^2.
    """

    k: int
    weights: np.ndarray


@dataclass(frozen=True)
class DdiParams:
    """Pre-pool window size k (odd) and accumulation count T (>= 1)."""

    k: int = 3
    T: int = 9

    def __post_init__(self):
        if self.k < 1 or self.k % 2 == 0:
            raise ParameterError(f"k must be a positive odd integer, got {self.k}")
        if self.T < 1:
            raise ParameterError(f"T must be >= 1, got {self.T}")


def pool_kernel(k: int) -> PoolKernel:
    """Build the distance-weighted pooling kernel for an odd window size k."""
    if k < 1 or k % 2 == 0:
        raise ParameterError(f"window size must be a positive odd integer, got {k}")
    center = (k + 1) / 2.0  # 1-based center index
    offsets = center - np.arange(1, k + 1, dtype=np.float64)
    dist = np.sqrt(offsets[:, None] ** 2 + offsets[None, :] ** 2)
    with np.errstate(divide="ignore"):
        weights = 1.0 / (k * k * dist)
    weights[k // 2, k // 2] = 2.0 / (k * k)
    return PoolKernel(k=k, weights=weights)


def kernel_mean(kernel: PoolKernel) -> float:
    """Mean kernel weight: sum of all weights divided by k^2."""
    return float(kernel.weights.sum()) / (kernel.k * kernel.k)


def weighted_pool(image, kernel: PoolKernel) -> np.ndarray:
    """Correlate an image with a pooling kernel and divide by k^2.

    Borders use replicate (edge-clamp) padding, which keeps constant images
    exact fixed points up to the kernel-mean factor: pooling a constant c
    yields c * kernel_mean(kernel) everywhere.
    """
    img = as_image(image)
    if kernel.k > min(img.shape):
        raise ParameterError(
            f"kernel size {kernel.k} exceeds image extent {img.shape[1]}x{img.shape[0]}"
        )
    return ndimage.correlate(img, kernel.weights, mode="nearest") / (kernel.k * kernel.k)


def log_ratio(i1p, i2p) -> np.ndarray:
    """Absolute natural-log ratio |ln(i2p / i1p)|, elementwise.

    Both inputs are floored at RATIO_EPS so exact zeros cannot reach the
    division or the log.
    """
    a = as_image(i1p, "i1p")
    b = as_image(i2p, "i2p")
    if a.shape != b.shape:
        raise ParameterError(f"shape mismatch: {a.shape} vs {b.shape}")
    a = np.maximum(a, RATIO_EPS)
    b = np.maximum(b, RATIO_EPS)
    return np.abs(np.log(b / a))


def cumulative_pool(image, T: int) -> np.ndarray:
    """Average of T normalized poolings at window sizes 1, 3, ..., 2T-1.

    Each pooled image is divided by its kernel mean, so a constant input is
    reproduced exactly (including borders) for any T.
    """
    img = as_image(image)
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T}")
    if 2 * T - 1 > min(img.shape):
        raise ParameterError(
            f"largest window {2 * T - 1} exceeds image extent {img.shape[1]}x{img.shape[0]}"
        )
    acc = np.zeros_like(img)
    for t in range(1, T + 1):
        kern = pool_kernel(2 * t - 1)
        acc += weighted_pool(img, kern) / kernel_mean(kern)
    return acc / T


def deep_difference(i1, i2, params: DdiParams) -> np.ndarray:
    """Full difference-image pipeline: pre-pool, log-ratio, cumulative pooling.

    Symmetric in its inputs (the log-ratio takes an absolute value), and
    maps identical inputs to the zero image.
    """
    a = as_image(i1, "i1")
    b = as_image(i2, "i2")
    if a.shape != b.shape:
        raise ParameterError(f"shape mismatch: {a.shape} vs {b.shape}")
    kern = pool_kernel(params.k)
    i1p = weighted_pool(a, kern)
    i2p = weighted_pool(b, kern)
    return cumulative_pool(log_ratio(i1p, i2p), params.T)
