"""Codec engine tests: reversible round trips, the frozen q -> step law,
deterministic output, tile-isolated corruption handling, and the effect of
sensitivity-driven modulation."""

import numpy as np
import pytest

from adaptix.codec import Bitstream, CompressionParams, decode, encode
from adaptix.codec.constants import TILE_SIZE
from adaptix.codec.engine import base_step
from adaptix.errors import (
    CorruptStreamError,
    FormatError,
    OutOfRangeError,
    ParamInvalidError,
)
from adaptix.metrics import psnr

from conftest import gradient_frame, make_frame, random_frame


# ---------------------------------------------------------------------------
# q -> base step law (frozen)

def test_base_step_frozen_points():
    assert base_step(0.0) == 1.0
    assert base_step(12.5) == pytest.approx(2.0)
    assert base_step(50.0) == pytest.approx(16.0)
    assert base_step(100.0) == pytest.approx(256.0)


def test_base_step_range():
    with pytest.raises(OutOfRangeError):
        base_step(-1.0)
    with pytest.raises(OutOfRangeError):
        base_step(100.5)


# ---------------------------------------------------------------------------
# lossless contract

@pytest.mark.parametrize("shape", [(1, 1), (1, 3), (5, 5), (63, 65),
                                   (64, 64), (128, 100), (200, 3)])
@pytest.mark.parametrize("bit_depth", [10, 12, 16])
def test_lossless_round_trip(shape, bit_depth):
    rng = np.random.default_rng(hash((shape, bit_depth)) & 0xFFFF)
    frame = random_frame(rng, shape[1], shape[0], bit_depth=bit_depth)
    stream = encode(frame, CompressionParams(q=0.0))
    assert decode(stream) == frame


def test_lossless_rgb(rng):
    frame = random_frame(rng, 77, 45, channels=3, bit_depth=12)
    assert decode(encode(frame, CompressionParams(q=0.0))) == frame


def test_q_zero_equals_lossless_flag(rng):
    frame = random_frame(rng, 64, 64)
    a = encode(frame, CompressionParams(q=0.0))
    b = encode(frame, CompressionParams(q=37.0, lossless=True))
    assert a.data == b.data
    assert a.header.lossless and b.header.lossless


def test_deterministic_bytes(rng):
    frame = random_frame(rng, 100, 80)
    params = CompressionParams(q=42.0)
    assert encode(frame, params).data == encode(frame, params).data


def test_constant_frame_compresses_hard():
    frame = make_frame(np.full((256, 256), 555, dtype=np.uint16))
    stream = encode(frame, CompressionParams(q=0.0))
    assert frame.raw_bytes / len(stream) > 30


# ---------------------------------------------------------------------------
# lossy behavior

def test_lossy_quality_and_size_ordering():
    frame = gradient_frame(width=256, height=256, noise_sigma=1.0, seed=3)
    sizes, psnrs = [], []
    for q in (10, 40, 70, 100):
        stream = encode(frame, CompressionParams(q=q))
        sizes.append(len(stream))
        psnrs.append(psnr(frame, decode(stream)))
    assert sizes == sorted(sizes, reverse=True)
    # step clamping makes very low q plateau; 0.1 dB tolerance as documented
    for lo, hi in zip(psnrs[1:], psnrs[:-1]):
        assert lo <= hi + 0.1


def test_lossy_never_exceeds_sample_range(rng):
    frame = random_frame(rng, 96, 96, bit_depth=10)
    out = decode(encode(frame, CompressionParams(q=85.0)))
    assert out.samples.max() <= 1023


def test_header_metadata(rng):
    frame = random_frame(rng, 130, 70, bit_depth=12)
    stream = encode(frame, CompressionParams(q=30.0))
    h = stream.header
    assert (h.width, h.height, h.channels, h.bit_depth) == (130, 70, 1, 12)
    assert h.tile_size == TILE_SIZE
    assert h.q == 30.0
    assert h.tile_grid == (2, 3)


# ---------------------------------------------------------------------------
# tile modulation

def test_modulation_changes_rate(rng):
    frame = random_frame(rng, 128, 128)
    uniform = encode(frame, CompressionParams(q=50.0))
    coarse = encode(frame, CompressionParams(
        q=50.0, tile_modulation=np.full((2, 2), 4.0)))
    fine = encode(frame, CompressionParams(
        q=50.0, tile_modulation=np.full((2, 2), 0.25)))
    assert len(coarse) < len(uniform) < len(fine)


def test_modulation_validation(rng):
    frame = random_frame(rng, 128, 128)
    with pytest.raises(ParamInvalidError):
        encode(frame, CompressionParams(q=50.0,
                                        tile_modulation=np.ones((3, 3))))
    with pytest.raises(ParamInvalidError):
        encode(frame, CompressionParams(q=50.0,
                                        tile_modulation=np.full((2, 2), 8.0)))


def test_q_out_of_range(rng):
    frame = random_frame(rng, 32, 32)
    with pytest.raises(OutOfRangeError):
        encode(frame, CompressionParams(q=101.0))


# ---------------------------------------------------------------------------
# corruption: tiles fail independently

def _corrupt_last_payload_byte(data: bytes) -> bytes:
    corrupted = bytearray(data)
    corrupted[-5] ^= 0xFF
    return bytes(corrupted)


def test_corrupt_tile_strict_raises(rng):
    frame = random_frame(rng, 128, 128)
    stream = encode(frame, CompressionParams(q=0.0))
    bad = _corrupt_last_payload_byte(stream.data)
    with pytest.raises(CorruptStreamError) as err:
        decode(bad)
    assert err.value.tile_indices


def test_corrupt_tile_isolated(rng):
    """Flipping one byte in one tile segment damages exactly that tile;
    every other tile still decodes bit-exactly."""
    frame = random_frame(rng, 128, 128)
    stream = encode(frame, CompressionParams(q=0.0))
    clean = decode(stream)
    out, corrupt = decode(_corrupt_last_payload_byte(stream.data), strict=False)
    assert corrupt == [(1, 1)]
    ts = TILE_SIZE
    for ti in range(2):
        for tj in range(2):
            region = np.s_[:, ti * ts:(ti + 1) * ts, tj * ts:(tj + 1) * ts]
            if (ti, tj) in corrupt:
                assert np.all(out.samples[region] == 512)   # mid-gray fill
            else:
                assert np.array_equal(out.samples[region],
                                      clean.samples[region])


def test_header_corruption_detected(rng):
    frame = random_frame(rng, 32, 32)
    stream = encode(frame, CompressionParams(q=0.0))
    bad = bytearray(stream.data)
    bad[10] ^= 0x01                      # inside the checksummed header
    with pytest.raises(FormatError):
        decode(bytes(bad))


def test_truncated_stream(rng):
    frame = random_frame(rng, 64, 64)
    stream = encode(frame, CompressionParams(q=0.0))
    with pytest.raises(FormatError):
        decode(stream.data[:10])
    with pytest.raises(CorruptStreamError):
        decode(stream.data[: len(stream.data) - 30])


def test_bitstream_from_raw_bytes(rng):
    frame = random_frame(rng, 40, 40)
    stream = encode(frame, CompressionParams(q=0.0))
    rebuilt = Bitstream(stream.data)
    assert rebuilt.header.width == 40
    assert decode(rebuilt) == frame
