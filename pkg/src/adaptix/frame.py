"""Core raster types: decoded frames and their catalog metadata."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np


class ColorSpace(Enum):
    LINEAR_RGB = "linear_rgb"
    LOG = "log"
    GRAY = "gray"


# Rec.709 luma weights, shared by the metrics and analysis stages.
LUMA_WEIGHTS = (0.2126, 0.7152, 0.0722)

VALID_BIT_DEPTHS = (10, 12, 16)


@dataclass
class Frame:
    """A decoded raster: ``samples`` is a (channels, height, width) uint16 array.

    Sample values are plain code values in [0, 2^bit_depth - 1]; 10/12-bit
    data is carried unscaled in the 16-bit container.
    """

    width: int
    height: int
    channels: int
    bit_depth: int
    samples: np.ndarray
    color_space: ColorSpace = ColorSpace.LINEAR_RGB
    source_id: str = ""

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.uint16)
        self.validate()

    def validate(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("frame dimensions must be >= 1")
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        if self.bit_depth not in VALID_BIT_DEPTHS:
            raise ValueError("bit_depth must be one of %s" % (VALID_BIT_DEPTHS,))
        if self.samples.shape != (self.channels, self.height, self.width):
            raise ValueError(
                "samples shape %s does not match (channels, height, width)=%s"
                % (self.samples.shape, (self.channels, self.height, self.width))
            )
        if self.bit_depth < 16 and int(self.samples.max(initial=0)) >= (1 << self.bit_depth):
            raise ValueError("sample value exceeds 2^bit_depth - 1")

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    @property
    def raw_bytes(self) -> int:
        """Bit-true payload size: width*height*channels*bit_depth/8."""
        return self.width * self.height * self.channels * self.bit_depth // 8

    def luma(self) -> np.ndarray:
        """Float64 luma plane (identity for single-channel frames)."""
        if self.channels == 1:
            return self.samples[0].astype(np.float64)
        wr, wg, wb = LUMA_WEIGHTS
        s = self.samples.astype(np.float64)
        return wr * s[0] + wg * s[1] + wb * s[2]

    def digest(self) -> str:
        """SHA-256 over a canonical serialization, used for provenance seals."""
        h = hashlib.sha256()
        h.update(b"AFRM")
        h.update(
            self.width.to_bytes(4, "little")
            + self.height.to_bytes(4, "little")
            + self.channels.to_bytes(1, "little")
            + self.bit_depth.to_bytes(1, "little")
        )
        h.update(np.ascontiguousarray(self.samples, dtype="<u2").tobytes())
        return h.hexdigest()

    def same_shape(self, other: "Frame") -> bool:
        return (
            self.width == other.width
            and self.height == other.height
            and self.channels == other.channels
            and self.bit_depth == other.bit_depth
        )

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return self.same_shape(other) and bool(np.array_equal(self.samples, other.samples))


class ContentFlag(Enum):
    BW = "bw"
    COLOR = "color"
    SUBTITLES = "subtitles"


@dataclass
class FrameMetadata:
    """Catalog metadata carried alongside a frame.

    Fields absent from the source header stay ``None`` -- they are provenance
    and must never be fabricated.
    """

    name: str = ""
    sequence_index: int = 0
    capture_date: Optional[str] = None
    camera: Optional[str] = None
    content_flags: set = field(default_factory=set)

    def __post_init__(self):
        if self.sequence_index < 0:
            raise ValueError("sequence_index must be >= 0")
