"""Tile codec: transform, quantize, entropy-code, and the exact inverse."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from ..errors import (
    CorruptStreamError,
    DimensionMismatchError,
    OutOfRangeError,
    ParamInvalidError,
)
from ..frame import Frame, ColorSpace
from . import constants as K
from . import rangecoder as rc
from . import wavelet as wv
from .bitstream import BitstreamHeader, iter_tiles, pack_header, pack_tile, unpack_header


@dataclass
class CompressionParams:
    """Encoder knobs: global quality scalar plus optional per-tile modulation."""

    q: float = 0.0
    tile_modulation: Optional[np.ndarray] = None  # per-tile step multipliers
    levels: int = K.DEFAULT_LEVELS
    lossless: bool = False

    def __post_init__(self):
        if self.q == 0:
            self.lossless = True


@dataclass
class Bitstream:
    """An encoded frame: raw bytes plus the parsed header."""

    data: bytes
    header: BitstreamHeader = field(repr=False, default=None)

    def __post_init__(self):
        if self.header is None:
            self.header, _ = unpack_header(self.data)

    def __len__(self):
        return len(self.data)


def base_step(q: float) -> float:
    """Quality scalar to base quantizer step: 1 at q=0, 2^(q/12.5) otherwise."""
    if not 0 <= q <= 100:
        raise OutOfRangeError("q must be in [0, 100], got %r" % (q,))
    if q == 0:
        return 1.0
    return 2.0 ** (q / K.Q_STEP_EXP_DIV)


@lru_cache(maxsize=256)
def _tile_plan(th: int, tw: int, levels: int, filt: str, ts_key: float):
    """Per-tile-shape coding plan: subband labels, group vector, step factors.

    ``ts_key`` is the unmodulated band-0 base step (base_step(q)); cached per
    (shape, levels, filter, step) combination.
    """
    labels, nbands = wv.subband_layout(th, tw, levels)
    lv = wv.effective_levels(th, tw, levels)
    factors = np.empty(nbands, dtype=np.float64)
    for band in range(nbands):
        if band == 0:
            kind, stages = "LL", max(lv, 1)
        else:
            depth, k = divmod(band - 1, 3)
            kind = ("HL", "LH", "HH")[k]
            stages = lv - depth
        factors[band] = ts_key * K.band_step_factor(filt, kind, stages)
    groups = labels.ravel().astype(np.int32)
    return labels, nbands, groups, factors


def _band_steps(factors: np.ndarray, tile_mult: float) -> np.ndarray:
    return np.maximum(factors * tile_mult, K.MIN_STEP)


def _quantize(coeffs: np.ndarray, labels: np.ndarray, steps: np.ndarray) -> np.ndarray:
    step_map = steps[labels]
    q = np.trunc(coeffs / step_map)              # deadzone for AC bands
    ll = labels == 0
    q[ll] = np.floor(coeffs[ll] / step_map[ll] + 0.5)  # plain rounding for LL
    return q.astype(np.int32)


def _dequantize(q: np.ndarray, labels: np.ndarray, steps: np.ndarray) -> np.ndarray:
    step_map = steps[labels]
    mag = np.abs(q).astype(np.float64)
    # midpoint of the integer bin [m*step, (m+1)*step): floor((m + 0.5)*step);
    # degenerates to the identity at step 1, keeping near-lossless q exact
    rec = np.sign(q) * np.floor((mag + 0.5) * step_map)
    rec[q == 0] = 0.0
    ll = labels == 0
    rec[ll] = np.floor(q[ll] * step_map[ll] + 0.5)
    return rec.astype(np.int64)


def _tile_ranges(extent: int, tile_size: int):
    return [(t0, min(t0 + tile_size, extent)) for t0 in range(0, extent, tile_size)]


def encode(frame: Frame, params: CompressionParams,
           sensitivity=None) -> Bitstream:
    """Compress ``frame``; a sensitivity map (or explicit ``tile_modulation``)
    scales per-tile quantizer steps down in weighted regions."""
    lossless = params.lossless or params.q == 0
    q = 0.0 if lossless else float(params.q)
    step0 = base_step(q)
    filt = "53" if lossless else "97"
    ts = K.TILE_SIZE
    nty = -(-frame.height // ts)
    ntx = -(-frame.width // ts)

    modulation = params.tile_modulation
    if modulation is None and sensitivity is not None:
        modulation = 1.0 / np.asarray(sensitivity.weights, dtype=np.float64)
    if modulation is None:
        table = np.full((nty, ntx), K.MOD_FIX, dtype=np.uint16)
    else:
        modulation = np.asarray(modulation, dtype=np.float64)
        if modulation.shape != (nty, ntx):
            raise ParamInvalidError(
                "modulation grid %s does not match tile grid %s"
                % (modulation.shape, (nty, ntx)))
        if modulation.min() < K.MOD_MIN - 1e-9 or modulation.max() > K.MOD_MAX + 1e-9:
            raise ParamInvalidError("modulation values must lie in [0.25, 4.0]")
        table = np.round(modulation * K.MOD_FIX).astype(np.uint16)

    header = BitstreamHeader(
        width=frame.width, height=frame.height, channels=frame.channels,
        bit_depth=frame.bit_depth, tile_size=ts, levels=params.levels,
        q=q, lossless=lossless, step_table=table,
    )
    out = [pack_header(header)]

    shift = 1 << (frame.bit_depth - 1)
    planes = frame.samples.astype(np.int64) - shift
    rows = _tile_ranges(frame.height, ts)
    cols = _tile_ranges(frame.width, ts)
    for ti, (y0, y1) in enumerate(rows):
        for tj, (x0, x1) in enumerate(cols):
            labels, nbands, groups, factors = _tile_plan(
                y1 - y0, x1 - x0, params.levels, filt, step0)
            steps = _band_steps(factors, table[ti, tj] / K.MOD_FIX)
            qcoeffs = np.empty(frame.channels * labels.size, dtype=np.int32)
            for ch in range(frame.channels):
                coeffs = wv.forward_2d(planes[ch, y0:y1, x0:x1], params.levels, filt)
                if lossless:
                    qc = coeffs.astype(np.int32)
                else:
                    qc = _quantize(coeffs, labels, steps)
                qcoeffs[ch * labels.size:(ch + 1) * labels.size] = qc.ravel()
            allgroups = np.tile(groups, frame.channels)
            buf = np.zeros(qcoeffs.size * 8 + 256, dtype=np.uint8)
            n = rc.encode_coeffs(qcoeffs, allgroups, nbands, buf)
            if n < 0:  # pragma: no cover - buffer sized for worst case
                raise RuntimeError("entropy coder overflow")
            out.append(pack_tile(buf[:n].tobytes()))
    return Bitstream(data=b"".join(out), header=header)


def decode(stream, *, strict: bool = True):
    """Reconstruct a Frame from an ATC1 stream.

    With ``strict`` (default) any corrupt tile raises
    :class:`CorruptStreamError`.  With ``strict=False`` returns
    ``(frame, corrupt_tiles)`` where corrupt tiles are filled with mid-gray.
    """
    data = stream.data if isinstance(stream, Bitstream) else bytes(stream)
    header, offset = unpack_header(data)
    ts = header.tile_size
    nty, ntx = header.tile_grid
    filt = "53" if header.lossless else "97"
    step0 = base_step(header.q)
    maxv = (1 << header.bit_depth) - 1
    shift = 1 << (header.bit_depth - 1)

    # zero here becomes mid-gray after the level shift below
    planes = np.zeros((header.channels, header.height, header.width),
                      dtype=np.int64)
    rows = _tile_ranges(header.height, ts)
    cols = _tile_ranges(header.width, ts)
    corrupt = []
    for idx, payload in iter_tiles(data, offset, nty * ntx):
        ti, tj = divmod(idx, ntx)
        y0, y1 = rows[ti]
        x0, x1 = cols[tj]
        labels, nbands, groups, factors = _tile_plan(
            y1 - y0, x1 - x0, header.levels, filt, step0)
        if payload is None:
            corrupt.append((ti, tj))
            continue
        steps = _band_steps(factors, header.step_table[ti, tj] / K.MOD_FIX)
        qcoeffs = np.empty(header.channels * labels.size, dtype=np.int32)
        status = rc.decode_coeffs(
            np.frombuffer(payload, dtype=np.uint8),
            np.tile(groups, header.channels), nbands, qcoeffs)
        if status != 0:
            corrupt.append((ti, tj))
            continue
        for ch in range(header.channels):
            qc = qcoeffs[ch * labels.size:(ch + 1) * labels.size].reshape(labels.shape)
            if header.lossless:
                coeffs = qc.astype(np.int64)
            else:
                coeffs = _dequantize(qc, labels, steps)
            rec = wv.inverse_2d(coeffs, header.levels, filt)
            planes[ch, y0:y1, x0:x1] = rec
    if corrupt and strict:
        raise CorruptStreamError(
            "%d corrupt tile(s): %s" % (len(corrupt), corrupt[:8]), corrupt)

    samples = np.clip(planes + shift, 0, maxv).astype(np.uint16)
    frame = Frame(
        width=header.width, height=header.height, channels=header.channels,
        bit_depth=header.bit_depth, samples=samples,
        color_space=ColorSpace.GRAY if header.channels == 1 else ColorSpace.LINEAR_RGB,
    )
    if strict:
        return frame
    return frame, corrupt
