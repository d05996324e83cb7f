"""ATC1 bitstream container: header pack/unpack and tile segment framing.

All multi-byte integers are little-endian.  Layout (see docs/FORMAT.md):

  0   magic "ATC1"
  4   u8  format version
  5   u8  flags (bit 0: lossless)
  6   u32 width
  10  u32 height
  14  u8  channels
  15  u8  bit depth
  16  u16 tile size
  18  u8  decomposition levels
  19  f64 quality scalar q
  27  u16 * ntiles  per-tile step multipliers (x4096 fixed point, row-major)
  ..  u32 CRC-32 of all header bytes above
  ..  per tile, row-major: u32 payload length, u32 payload CRC-32, payload
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from ..errors import BadMagicError, CorruptStreamError, DimensionMismatchError
from . import constants as K

_FIXED = struct.Struct("<4sBBIIBBHBd")


@dataclass
class BitstreamHeader:
    width: int
    height: int
    channels: int
    bit_depth: int
    tile_size: int
    levels: int
    q: float
    lossless: bool
    step_table: np.ndarray  # uint16, (nty, ntx)

    @property
    def tile_grid(self):
        nty = -(-self.height // self.tile_size)
        ntx = -(-self.width // self.tile_size)
        return nty, ntx


def pack_header(h: BitstreamHeader) -> bytes:
    fixed = _FIXED.pack(
        K.MAGIC, K.VERSION, 1 if h.lossless else 0,
        h.width, h.height, h.channels, h.bit_depth,
        h.tile_size, h.levels, h.q,
    )
    table = np.ascontiguousarray(h.step_table, dtype="<u2").tobytes()
    body = fixed + table
    return body + struct.pack("<I", zlib.crc32(body))


def unpack_header(data: bytes):
    """Parse and CRC-check the header; returns (header, payload_offset)."""
    if len(data) < 4 or data[:4] != K.MAGIC:
        raise BadMagicError("not an ATC1 stream")
    if len(data) < _FIXED.size:
        raise CorruptStreamError("truncated header")
    magic, version, flags, width, height, channels, bit_depth, tile_size, levels, q = (
        _FIXED.unpack_from(data, 0)
    )
    if version != K.VERSION:
        raise CorruptStreamError("unsupported stream version %d" % version)
    if width < 1 or height < 1 or channels not in (1, 3) or tile_size < 1:
        raise DimensionMismatchError("inconsistent stream dimensions")
    nty = -(-height // tile_size)
    ntx = -(-width // tile_size)
    end = _FIXED.size + 2 * nty * ntx
    if len(data) < end + 4:
        raise CorruptStreamError("truncated header")
    stored_crc = struct.unpack_from("<I", data, end)[0]
    if zlib.crc32(data[:end]) != stored_crc:
        raise CorruptStreamError("header CRC mismatch")
    table = np.frombuffer(data[_FIXED.size:end], dtype="<u2").reshape(nty, ntx)
    header = BitstreamHeader(
        width=width, height=height, channels=channels, bit_depth=bit_depth,
        tile_size=tile_size, levels=levels, q=q, lossless=bool(flags & 1),
        step_table=table.copy(),
    )
    return header, end + 4


def pack_tile(payload: bytes) -> bytes:
    return struct.pack("<II", len(payload), zlib.crc32(payload)) + payload


def iter_tiles(data: bytes, offset: int, ntiles: int):
    """Yield (tile_index, payload_or_None); None marks a corrupt segment.

    A length prefix overrunning the stream poisons everything after it, so
    the remaining tiles are reported corrupt as well.
    """
    pos = offset
    for i in range(ntiles):
        if pos + 8 > len(data):
            for j in range(i, ntiles):
                yield j, None
            return
        length, crc = struct.unpack_from("<II", data, pos)
        pos += 8
        if pos + length > len(data):
            for j in range(i, ntiles):
                yield j, None
            return
        payload = data[pos:pos + length]
        pos += length
        yield i, payload if zlib.crc32(payload) == crc else None
