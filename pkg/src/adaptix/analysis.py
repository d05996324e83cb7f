"""Characteristic analysis: global frame statistics and the per-tile
sensitivity map that steers bit allocation.

Tiles are scored on a detrended gradient energy (mean Sobel magnitude after
removing each tile's least-squares plane) so that pure smooth ramps read as
zero texture; the raw Sobel response of a ramp is its slope, which would
mask exactly the banding-prone regions this stage exists to protect.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.ndimage import convolve

from .codec.constants import TILE_SIZE
from .frame import Frame


class TileFlag(Enum):
    SMOOTH_GRADIENT = "smooth_gradient"
    HIGH_TEXTURE = "high_texture"
    NOISY = "noisy"


@dataclass
class AnalysisConfig:
    """Declared analysis constants; all overridable via the config file."""

    tile_size: int = TILE_SIZE
    # smooth-gradient detection
    grad_threshold: float = 1.0        # LSB mean Sobel response per pixel
    spread_threshold: float = 0.05     # fraction of full scale
    # expected mean Sobel magnitude (normalized /8) produced by unit-sigma
    # i.i.d. noise: sqrt(12 * pi/2) / 8
    noise_grad_coef: float = 0.543
    noise_ratio: float = 3.0           # NOISY when grad < ratio * noise term
    noise_floor: float = 0.5           # ignore noise estimates below this (LSB)
    # weight multipliers
    smooth_boost: float = 2.0
    texture_boost: float = 1.5
    noisy_cut: float = 0.5
    texture_decile: float = 0.9
    weight_min: float = 0.25
    weight_max: float = 4.0
    # percentile dynamic range, robust to grain speckle
    range_percentiles: tuple = (0.1, 99.9)


@dataclass
class FrameStats:
    dynamic_range: tuple
    contrast_index: float
    noise_sigma: float
    banding_risk: bool
    palette_saturation: float


@dataclass
class SensitivityMap:
    tile_size: int
    weights: np.ndarray                 # (nty, ntx) float64 in [0.25, 4.0]
    flags: list = field(repr=False, default_factory=list)  # list of list of set


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = _SOBEL_X.T


def _noise_sigma(luma: np.ndarray) -> float:
    """Robust noise estimate: 1.4826 * MAD of the 4-neighbor Laplacian,
    normalized by sqrt(20) (the Laplacian's variance gain on i.i.d. noise)."""
    if min(luma.shape) < 3:
        return 0.0
    lap = (4.0 * luma[1:-1, 1:-1]
           - luma[:-2, 1:-1] - luma[2:, 1:-1]
           - luma[1:-1, :-2] - luma[1:-1, 2:])
    med = np.median(lap)
    mad = np.median(np.abs(lap - med))
    return float(1.4826 * mad / np.sqrt(20.0))


def _detrended_gradient(tile: np.ndarray) -> float:
    """Mean Sobel magnitude (in LSB/pixel) after removing the tile's
    least-squares plane."""
    h, w = tile.shape
    if h < 3 or w < 3:
        return 0.0
    yy, xx = np.mgrid[0:h, 0:w]
    a = np.column_stack([xx.ravel(), yy.ravel(), np.ones(h * w)])
    coef, *_ = np.linalg.lstsq(a, tile.ravel(), rcond=None)
    resid = tile - (coef[0] * xx + coef[1] * yy + coef[2])
    gx = convolve(resid, _SOBEL_X, mode="nearest")[1:-1, 1:-1]
    gy = convolve(resid, _SOBEL_Y, mode="nearest")[1:-1, 1:-1]
    return float(np.mean(np.hypot(gx, gy)) / 8.0)


def analyze_frame(frame: Frame, config: AnalysisConfig = None):
    """Compute (FrameStats, SensitivityMap) for one frame."""
    cfg = config or AnalysisConfig()
    maxv = float(frame.max_value)
    luma = frame.luma()

    lo, hi = np.percentile(luma, cfg.range_percentiles)
    contrast = float((hi - lo) / maxv)
    sigma = _noise_sigma(luma)

    if frame.channels == 1:
        saturation = 0.0
    else:
        s = frame.samples.astype(np.float64)
        chroma = s.max(axis=0) - s.min(axis=0)
        saturation = float(np.mean(chroma) / maxv)

    ts = cfg.tile_size
    nty = -(-frame.height // ts)
    ntx = -(-frame.width // ts)
    grad = np.zeros((nty, ntx))
    spread = np.zeros((nty, ntx))
    for ti in range(nty):
        for tj in range(ntx):
            tile = luma[ti * ts:(ti + 1) * ts, tj * ts:(tj + 1) * ts]
            # quantized to a 1e-6 grid so threshold/decile decisions are
            # stable under geometric transforms (fp summation order)
            grad[ti, tj] = round(_detrended_gradient(tile), 6)
            spread[ti, tj] = float(tile.max() - tile.min())

    textured = grad > cfg.grad_threshold
    decile = np.quantile(grad, cfg.texture_decile) if grad.size > 1 else np.inf
    high_texture = textured & (grad >= decile)
    smooth = (grad < cfg.grad_threshold) & (spread > cfg.spread_threshold * maxv)
    noise_term = cfg.noise_grad_coef * sigma
    noisy = (sigma > cfg.noise_floor) & (grad < cfg.noise_ratio * noise_term) & ~smooth

    weights = np.ones((nty, ntx))
    weights[smooth] *= cfg.smooth_boost
    weights[high_texture] *= cfg.texture_boost
    weights[noisy] *= cfg.noisy_cut
    weights = np.clip(weights, cfg.weight_min, cfg.weight_max)

    flags = [
        [
            {f for f, m in ((TileFlag.SMOOTH_GRADIENT, smooth),
                            (TileFlag.HIGH_TEXTURE, high_texture),
                            (TileFlag.NOISY, noisy)) if m[ti, tj]}
            for tj in range(ntx)
        ]
        for ti in range(nty)
    ]

    stats = FrameStats(
        dynamic_range=(float(lo), float(hi)),
        contrast_index=contrast,
        noise_sigma=sigma,
        banding_risk=bool(smooth.any()),
        palette_saturation=saturation,
    )
    return stats, SensitivityMap(tile_size=ts, weights=weights, flags=flags)
