"""Tiled wavelet codec: reversible 5/3 lossless path, fixed-point 9/7 lossy
path, sensitivity-weighted deadzone quantization, adaptive binary range
coding.  Stream layout is documented in docs/FORMAT.md."""

from .constants import CODEC_VERSION, DEFAULT_LEVELS, TILE_SIZE
from .engine import Bitstream, CompressionParams, base_step, decode, encode

__all__ = [
    "Bitstream",
    "CompressionParams",
    "CODEC_VERSION",
    "DEFAULT_LEVELS",
    "TILE_SIZE",
    "base_step",
    "decode",
    "encode",
]
