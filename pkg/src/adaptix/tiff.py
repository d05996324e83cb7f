"""Minimal TIFF 6.0 reader/writer with the private compressed-payload
convention and provenance seal tags.

Uncompressed output is baseline-readable: samples in a 16-bit container
(10/12-bit values zero-extended, true depth in a private tag).  Compressed
output stores the codec bitstream in a single strip under private
Compression code 65480, so standard readers fail cleanly instead of
misrendering.

Private tags (reusable range 65000-65535):
  65481 true bit depth (SHORT)     65482 profile id (ASCII)
  65483 SSIM (DOUBLE)              65484 PSNR dB (DOUBLE, 1.0e308 = infinite)
  65485 iterations (SHORT)         65486 codec version (ASCII)
  65487 original digest (ASCII hex)
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    BadMagicError,
    DimensionOverflowError,
    PayloadWithoutDepthTagError,
    TruncatedError,
    UnsupportedTiffFeatureError,
)
from .frame import ColorSpace, Frame
from .metrics import PSNR_INF_TAG_VALUE

TAG_WIDTH = 256
TAG_LENGTH = 257
TAG_BITS_PER_SAMPLE = 258
TAG_COMPRESSION = 259
TAG_PHOTOMETRIC = 262
TAG_STRIP_OFFSETS = 273
TAG_SAMPLES_PER_PIXEL = 277
TAG_ROWS_PER_STRIP = 278
TAG_STRIP_BYTE_COUNTS = 279
TAG_PLANAR_CONFIG = 284
TAG_TILE_WIDTH = 322
TAG_TILE_LENGTH = 323
TAG_TILE_OFFSETS = 324

COMPRESSION_NONE = 1
COMPRESSION_ATC1 = 65480

TAG_TRUE_BIT_DEPTH = 65481
TAG_PROFILE_ID = 65482
TAG_SSIM = 65483
TAG_PSNR = 65484
TAG_ITERATIONS = 65485
TAG_CODEC_VERSION = 65486
TAG_ORIGINAL_DIGEST = 65487

TYPE_BYTE = 1
TYPE_ASCII = 2
TYPE_SHORT = 3
TYPE_LONG = 4
TYPE_DOUBLE = 12

_TYPE_SIZE = {TYPE_BYTE: 1, TYPE_ASCII: 1, TYPE_SHORT: 2, TYPE_LONG: 4, TYPE_DOUBLE: 8}

PROFILE_IDS = ("C0", "C1", "C2")


@dataclass
class Seal:
    """Provenance record embedded in compressed output."""

    profile_id: str
    ssim: float
    psnr_db: float
    iterations: int
    codec_version: str
    original_digest: str

    def __post_init__(self):
        if self.profile_id not in PROFILE_IDS:
            raise ValueError("profile_id must be one of %s" % (PROFILE_IDS,))
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not -1.0 <= self.ssim <= 1.0:
            raise ValueError("ssim must lie in [-1, 1]")


def _entry(tag, typ, values):
    """One IFD entry; returns (packed_12_bytes_or_None, overflow_payload)."""
    if typ == TYPE_ASCII:
        data = values.encode("ascii") + b"\x00"
        count = len(data)
    else:
        data = b"".join(
            struct.pack("<" + {TYPE_SHORT: "H", TYPE_LONG: "I", TYPE_DOUBLE: "d"}[typ], v)
            for v in values)
        count = len(values)
    if len(data) <= 4:
        return tag, typ, count, data.ljust(4, b"\x00"), None
    return tag, typ, count, None, data


def write_tiff(frame: Frame, payload: Optional[bytes] = None,
               seal: Optional[Seal] = None) -> bytes:
    """Serialize a frame to TIFF bytes (little-endian, classic)."""
    if frame.width >= 2 ** 32 or frame.height >= 2 ** 32:
        raise DimensionOverflowError("image dimensions exceed 32 bits")

    if payload is None:
        strip = np.ascontiguousarray(frame.samples.transpose(1, 2, 0), dtype="<u2").tobytes()
        compression = COMPRESSION_NONE
    else:
        strip = bytes(payload)
        compression = COMPRESSION_ATC1

    photometric = 2 if frame.channels == 3 else 1

    entries = [
        _entry(TAG_WIDTH, TYPE_LONG, [frame.width]),
        _entry(TAG_LENGTH, TYPE_LONG, [frame.height]),
        _entry(TAG_BITS_PER_SAMPLE, TYPE_SHORT, [16] * frame.channels),
        _entry(TAG_COMPRESSION, TYPE_SHORT, [compression]),
        _entry(TAG_PHOTOMETRIC, TYPE_SHORT, [photometric]),
        _entry(TAG_STRIP_OFFSETS, TYPE_LONG, [0]),      # patched below
        _entry(TAG_SAMPLES_PER_PIXEL, TYPE_SHORT, [frame.channels]),
        _entry(TAG_ROWS_PER_STRIP, TYPE_LONG, [frame.height]),
        _entry(TAG_STRIP_BYTE_COUNTS, TYPE_LONG, [len(strip)]),
        _entry(TAG_PLANAR_CONFIG, TYPE_SHORT, [1]),
        _entry(TAG_TRUE_BIT_DEPTH, TYPE_SHORT, [frame.bit_depth]),
    ]
    if seal is not None:
        psnr_tag = PSNR_INF_TAG_VALUE if math.isinf(seal.psnr_db) else seal.psnr_db
        entries += [
            _entry(TAG_PROFILE_ID, TYPE_ASCII, seal.profile_id),
            _entry(TAG_SSIM, TYPE_DOUBLE, [seal.ssim]),
            _entry(TAG_PSNR, TYPE_DOUBLE, [psnr_tag]),
            _entry(TAG_ITERATIONS, TYPE_SHORT, [seal.iterations]),
            _entry(TAG_CODEC_VERSION, TYPE_ASCII, seal.codec_version),
            _entry(TAG_ORIGINAL_DIGEST, TYPE_ASCII, seal.original_digest),
        ]
    entries.sort(key=lambda e: e[0])
    if payload is not None and not any(e[0] == TAG_TRUE_BIT_DEPTH for e in entries):
        raise PayloadWithoutDepthTagError(
            "compressed payload requires the true-bit-depth tag")  # pragma: no cover

    header = struct.pack("<2sHI", b"II", 42, 8)
    ifd_size = 2 + 12 * len(entries) + 4
    overflow_base = 8 + ifd_size
    overflow = b""
    packed = []
    for tag, typ, count, inline, extra in entries:
        if extra is None:
            if tag == TAG_STRIP_OFFSETS:
                inline = None  # patched after overflow is sized
            packed.append([tag, typ, count, inline])
        else:
            packed.append([tag, typ, count,
                           struct.pack("<I", overflow_base + len(overflow))])
            overflow += extra
            if len(overflow) % 2:
                overflow += b"\x00"
    strip_offset = overflow_base + len(overflow)
    body = struct.pack("<H", len(packed))
    for tag, typ, count, inline in packed:
        if inline is None:
            inline = struct.pack("<I", strip_offset)
        body += struct.pack("<HHI", tag, typ, count) + inline
    body += struct.pack("<I", 0)  # no next IFD
    return header + body + overflow + strip


def _read_values(data, bo, typ, count, inline_raw):
    size = _TYPE_SIZE.get(typ)
    if size is None:
        return None
    total = size * count
    if total <= 4:
        raw = inline_raw[:total]
    else:
        off = struct.unpack(bo + "I", inline_raw)[0]
        if off + total > len(data):
            raise TruncatedError("tag value beyond end of file")
        raw = data[off:off + total]
    if typ == TYPE_ASCII:
        return raw.split(b"\x00", 1)[0].decode("ascii", "replace")
    fmt = {TYPE_BYTE: "B", TYPE_SHORT: "H", TYPE_LONG: "I", TYPE_DOUBLE: "d"}[typ]
    return list(struct.unpack(bo + str(count) + fmt, raw))


def parse_tiff(data: bytes):
    """Decode TIFF bytes into (Frame, Seal or None, payload bytes or None).

    Handles this tool's own output bit-exactly plus third-party baseline
    uncompressed 8/16-bit strips (8-bit input is zero-extended to 16-bit
    container, reported as bit_depth 16).
    """
    if len(data) < 8:
        raise BadMagicError("too short for a TIFF header")
    if data[:2] == b"II":
        bo = "<"
    elif data[:2] == b"MM":
        bo = ">"
    else:
        raise BadMagicError("bad TIFF byte-order mark %r" % (data[:2],))
    version, ifd_offset = struct.unpack(bo + "HI", data[2:8])
    if version != 42:
        raise BadMagicError("bad TIFF version %d" % version)
    if ifd_offset + 2 > len(data):
        raise TruncatedError("IFD beyond end of file")
    (nentries,) = struct.unpack(bo + "H", data[ifd_offset:ifd_offset + 2])
    if ifd_offset + 2 + 12 * nentries + 4 > len(data):
        raise TruncatedError("IFD truncated")

    tags = {}
    for i in range(nentries):
        off = ifd_offset + 2 + 12 * i
        tag, typ, count = struct.unpack(bo + "HHI", data[off:off + 8])
        values = _read_values(data, bo, typ, count, data[off + 8:off + 12])
        if values is not None:
            tags[tag] = values

    if TAG_TILE_WIDTH in tags or TAG_TILE_LENGTH in tags or TAG_TILE_OFFSETS in tags:
        raise UnsupportedTiffFeatureError("tiled TIFFs are not supported")
    if tags.get(TAG_PLANAR_CONFIG, [1])[0] != 1:
        raise UnsupportedTiffFeatureError("planar configuration 2 is not supported")
    compression = tags.get(TAG_COMPRESSION, [1])[0]
    if compression not in (COMPRESSION_NONE, COMPRESSION_ATC1):
        raise UnsupportedTiffFeatureError("unsupported compression %d" % compression)

    width = int(tags[TAG_WIDTH][0])
    height = int(tags[TAG_LENGTH][0])
    channels = int(tags.get(TAG_SAMPLES_PER_PIXEL, [1])[0])
    bits = tags.get(TAG_BITS_PER_SAMPLE, [1])
    if channels not in (1, 3) or len(set(bits)) != 1 or bits[0] not in (8, 16):
        raise UnsupportedTiffFeatureError(
            "unsupported sample layout: %d channels x %s bits" % (channels, bits))
    container_bits = int(bits[0])

    offsets = [int(v) for v in tags[TAG_STRIP_OFFSETS]]
    counts = [int(v) for v in tags[TAG_STRIP_BYTE_COUNTS]]
    if counts and max(o + c for o, c in zip(offsets, counts)) > len(data):
        raise TruncatedError("strip data beyond end of file")
    strip = b"".join(data[o:o + c] for o, c in zip(offsets, counts))

    seal = None
    if TAG_PROFILE_ID in tags:
        psnr_db = tags[TAG_PSNR][0]
        if psnr_db >= PSNR_INF_TAG_VALUE:
            psnr_db = math.inf
        seal = Seal(
            profile_id=tags[TAG_PROFILE_ID],
            ssim=tags[TAG_SSIM][0],
            psnr_db=psnr_db,
            iterations=int(tags[TAG_ITERATIONS][0]),
            codec_version=tags[TAG_CODEC_VERSION],
            original_digest=tags[TAG_ORIGINAL_DIGEST],
        )

    if compression == COMPRESSION_ATC1:
        # container transparency: the payload is returned undecoded, the
        # caller hands it to the codec; no Frame is materialized here
        return None, seal, strip

    bit_depth = int(tags.get(TAG_TRUE_BIT_DEPTH, [16])[0])
    expected = width * height * channels * (container_bits // 8)
    if len(strip) < expected:
        raise TruncatedError("strip data shorter than image size")
    if container_bits == 8:
        samples = np.frombuffer(strip, dtype=np.uint8, count=expected).astype(np.uint16)
        bit_depth = 16
    else:
        samples = np.frombuffer(strip, dtype=bo + "u2",
                                count=width * height * channels).astype(np.uint16)
    planes = samples.reshape(height, width, channels).transpose(2, 0, 1).copy()
    frame = Frame(
        width=width, height=height, channels=channels, bit_depth=bit_depth,
        samples=planes,
        color_space=ColorSpace.GRAY if channels == 1 else ColorSpace.LINEAR_RGB,
    )
    return frame, seal, None
