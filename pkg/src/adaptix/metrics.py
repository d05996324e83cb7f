"""Objective quality metrics (PSNR, SSIM) over high bit-depth frames.

These are the feedback signals of the iterative compression loop.  All
arithmetic is double precision regardless of frame depth; 12/16-bit squared
sums would overflow 32-bit accumulators.

SSIM follows the classic windowed formulation: Gaussian-weighted local
means, variances and covariance on the luma plane, valid window positions
only (no edge padding).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.ndimage import correlate1d

from .codec.constants import TILE_SIZE
from .errors import FrameTooSmallError, ShapeMismatchError
from .frame import Frame, LUMA_WEIGHTS

INFINITE = math.inf

# Rendering of the infinite-PSNR sentinel in TIFF tags (8-byte double).
PSNR_INF_TAG_VALUE = 1.0e308


@dataclass
class SsimParams:
    window: int = 11
    gaussian_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    luma_weights: tuple = LUMA_WEIGHTS

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        if abs(sum(self.luma_weights) - 1.0) > 1e-9:
            raise ValueError("luma weights must sum to 1")

    def kernel(self) -> np.ndarray:
        r = self.window // 2
        x = np.arange(-r, r + 1, dtype=np.float64)
        k = np.exp(-(x ** 2) / (2.0 * self.gaussian_sigma ** 2))
        return k / k.sum()


@dataclass
class QualityScore:
    ssim: float
    psnr_db: float
    per_channel_ssim: Optional[list] = None
    local_ssim_map: Optional[np.ndarray] = field(default=None, repr=False)


def _check_shapes(reference: Frame, test: Frame):
    if not reference.same_shape(test):
        raise ShapeMismatchError(
            "frames differ: %dx%dx%d/%d vs %dx%dx%d/%d" % (
                reference.width, reference.height, reference.channels,
                reference.bit_depth, test.width, test.height, test.channels,
                test.bit_depth))


def psnr(reference: Frame, test: Frame) -> float:
    """10*log10(MAX^2 / MSE); INFINITE for identical frames."""
    _check_shapes(reference, test)
    diff = reference.samples.astype(np.float64) - test.samples.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return INFINITE
    return 10.0 * math.log10(reference.max_value ** 2 / mse)


def _ssim_plane(a: np.ndarray, b: np.ndarray, params: SsimParams, dyn_range: float):
    """SSIM map over valid window positions of two float64 planes."""
    k = params.kernel()
    r = params.window // 2

    def smooth(img):
        out = correlate1d(img, k, axis=0, mode="constant")
        out = correlate1d(out, k, axis=1, mode="constant")
        return out[r:img.shape[0] - r, r:img.shape[1] - r]

    mu_a = smooth(a)
    mu_b = smooth(b)
    s_aa = smooth(a * a) - mu_a * mu_a
    s_bb = smooth(b * b) - mu_b * mu_b
    s_ab = smooth(a * b) - mu_a * mu_b
    c1 = (params.k1 * dyn_range) ** 2
    c2 = (params.k2 * dyn_range) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * s_ab + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (s_aa + s_bb + c2)
    # floating-point cancellation can push constant-region windows a few ulp
    # past 1; the metric itself is bounded by 1
    return np.clip(num / den, -1.0, 1.0)


def _tile_means(window_map: np.ndarray, offset: int, height: int, width: int,
                tile_size: int) -> np.ndarray:
    """Mean window score per codec tile; windows belong to the tile holding
    their center pixel.  Tiles without any valid window position are NaN."""
    nty = -(-height // tile_size)
    ntx = -(-width // tile_size)
    vh, vw = window_map.shape
    ty = (np.arange(vh) + offset) // tile_size
    tx = (np.arange(vw) + offset) // tile_size
    tidx = (ty[:, None] * ntx + tx[None, :]).ravel()
    sums = np.bincount(tidx, weights=window_map.ravel(), minlength=nty * ntx)
    counts = np.bincount(tidx, minlength=nty * ntx)
    with np.errstate(invalid="ignore"):
        means = sums / counts
    return means.reshape(nty, ntx)


def ssim(reference: Frame, test: Frame, params: SsimParams = None,
         tile_size: int = TILE_SIZE) -> QualityScore:
    """Structural similarity on the luma plane, plus per-channel values and
    a per-tile mean map aligned with the codec tile grid."""
    params = params or SsimParams()
    _check_shapes(reference, test)
    if min(reference.width, reference.height) < params.window:
        raise FrameTooSmallError(
            "frame %dx%d smaller than SSIM window %d"
            % (reference.width, reference.height, params.window))

    dyn_range = float(reference.max_value)
    luma_map = _ssim_plane(reference.luma(), test.luma(), params, dyn_range)
    global_ssim = float(luma_map.mean())

    per_channel = []
    for ch in range(reference.channels):
        a = reference.samples[ch].astype(np.float64)
        b = test.samples[ch].astype(np.float64)
        per_channel.append(float(_ssim_plane(a, b, params, dyn_range).mean()))

    local = _tile_means(luma_map, params.window // 2,
                        reference.height, reference.width, tile_size)
    return QualityScore(
        ssim=global_ssim,
        psnr_db=psnr(reference, test),
        per_channel_ssim=per_channel,
        local_ssim_map=local,
    )
