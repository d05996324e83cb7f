"""DPX (SMPTE 268M) reader for film-scan input.

Deliberate subset: image element 0 only, RGB (descriptor 50) or luminance
(descriptor 6), and three sample layouts:

* 10-bit, packing 1 (filled to 32-bit words, method A): three samples per
  word in bits 22-31 / 12-21 / 2-11, padding in bits 0-1;
* 12-bit, packing 1 (filled to 16-bit words, method A): sample in bits
  4-15 of each word;
* 16-bit, packing 0 or 1: one sample per 16-bit word.

Both byte orders are accepted (magic "SDPX" big-endian, "XPDS" little).
Header fields absent or blanked stay ``None`` in the metadata -- they feed
the provenance seal and must not be fabricated.
"""

from __future__ import annotations

import re
import struct

import numpy as np

from .errors import (
    BadDescriptorError,
    BadMagicError,
    TruncatedError,
    UnsupportedPackingError,
)
from .frame import ColorSpace, ContentFlag, Frame, FrameMetadata

MAGIC_BE = b"SDPX"
MAGIC_LE = b"XPDS"

GENERIC_HEADER_SIZE = 768
IMAGE_HEADER_OFFSET = 768
ELEMENT0_OFFSET = 780
FILM_FRAME_POSITION_OFFSET = 1712

DESCRIPTOR_LUMINANCE = 6
DESCRIPTOR_RGB = 50

TRANSFER_LINEAR = 2
TRANSFER_LOG = 3

UNDEF_U32 = 0xFFFFFFFF


def _cstr(raw: bytes):
    s = raw.split(b"\x00", 1)[0].decode("ascii", "replace").strip()
    return s or None


def _unpack_10bit_filled_a(payload: np.ndarray, count: int) -> np.ndarray:
    """payload: uint32 words, host-order-corrected.  Three samples per word,
    first sample in the most significant bits, 2 pad bits at the bottom."""
    words = payload.astype(np.uint32)
    out = np.empty(words.size * 3, dtype=np.uint16)
    out[0::3] = (words >> 22) & 0x3FF
    out[1::3] = (words >> 12) & 0x3FF
    out[2::3] = (words >> 2) & 0x3FF
    return out[:count]


def parse_dpx(data: bytes):
    """Decode a DPX byte sequence into (Frame, FrameMetadata)."""
    if len(data) < 4:
        raise BadMagicError("too short for a DPX magic number")
    magic = data[:4]
    if magic == MAGIC_BE:
        bo = ">"
    elif magic == MAGIC_LE:
        bo = "<"
    else:
        raise BadMagicError("bad DPX magic %r" % (magic,))
    if len(data) < ELEMENT0_OFFSET + 72:
        raise TruncatedError("DPX header truncated")

    def u32(off):
        return struct.unpack_from(bo + "I", data, off)[0]

    def u16(off):
        return struct.unpack_from(bo + "H", data, off)[0]

    data_offset = u32(4)
    filename = _cstr(data[36:136])
    create_time = _cstr(data[136:160])
    creator = _cstr(data[160:260])

    width = u32(IMAGE_HEADER_OFFSET + 4)
    height = u32(IMAGE_HEADER_OFFSET + 8)
    descriptor = data[ELEMENT0_OFFSET + 20]
    transfer = data[ELEMENT0_OFFSET + 21]
    bit_size = data[ELEMENT0_OFFSET + 23]
    packing = u16(ELEMENT0_OFFSET + 24)
    element_offset = u32(ELEMENT0_OFFSET + 28)
    if element_offset not in (0, UNDEF_U32):
        data_offset = element_offset

    if descriptor == DESCRIPTOR_RGB:
        channels = 3
    elif descriptor == DESCRIPTOR_LUMINANCE:
        channels = 1
    else:
        raise BadDescriptorError("unsupported descriptor %d" % descriptor)

    count = width * height * channels
    if bit_size == 10:
        if packing != 1:
            raise UnsupportedPackingError("10-bit requires filled method A packing")
        nwords = (count + 2) // 3
        payload_len = nwords * 4
        word_fmt = "u4"
    elif bit_size == 12:
        if packing != 1:
            raise UnsupportedPackingError("12-bit requires filled method A packing")
        payload_len = count * 2
        word_fmt = "u2"
    elif bit_size == 16:
        if packing not in (0, 1):
            raise UnsupportedPackingError("unsupported packing %d for 16-bit" % packing)
        payload_len = count * 2
        word_fmt = "u2"
    else:
        raise UnsupportedPackingError("unsupported bit size %d" % bit_size)

    if len(data) < data_offset + payload_len:
        raise TruncatedError(
            "file shorter than declared data offset %d + payload %d"
            % (data_offset, payload_len))

    words = np.frombuffer(data, dtype=bo + word_fmt, count=payload_len // int(word_fmt[1]),
                          offset=data_offset)
    if bit_size == 10:
        samples = _unpack_10bit_filled_a(words, count)
    elif bit_size == 12:
        samples = ((words.astype(np.uint16)) >> 4) & 0xFFF
    else:
        samples = words.astype(np.uint16)

    # interleaved (h, w, c) -> planar (c, h, w)
    planes = samples.reshape(height, width, channels).transpose(2, 0, 1)

    if channels == 1:
        color_space = ColorSpace.GRAY
    elif transfer == TRANSFER_LOG:
        color_space = ColorSpace.LOG
    else:
        color_space = ColorSpace.LINEAR_RGB

    frame = Frame(
        width=width, height=height, channels=channels, bit_depth=int(bit_size),
        samples=planes.copy(), color_space=color_space,
        source_id=filename or "",
    )

    sequence_index = 0
    if len(data) >= FILM_FRAME_POSITION_OFFSET + 4:
        pos = u32(FILM_FRAME_POSITION_OFFSET)
        if pos != UNDEF_U32:
            sequence_index = pos
    elif filename:
        m = re.search(r"(\d+)\D*$", filename)
        if m:
            sequence_index = int(m.group(1))

    flags = set()
    if channels == 1:
        flags.add(ContentFlag.BW)
    else:
        flags.add(ContentFlag.COLOR)

    meta = FrameMetadata(
        name=filename or "",
        sequence_index=sequence_index,
        capture_date=create_time,
        camera=creator,
        content_flags=flags,
    )
    return frame, meta
