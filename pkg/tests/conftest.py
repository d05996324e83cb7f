"""Shared fixtures: deterministic frame factories, a hand-built DPX writer
(independent of the production parser), and the 32-frame synthetic corpus
used by the controller/pipeline/acceptance suites."""

import os
import struct
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from adaptix.frame import Frame

# ---------------------------------------------------------------------------
# frame factories


def make_frame(samples, bit_depth=10, source_id=""):
    """Wrap a (c, h, w) or (h, w) uint16 array in a Frame."""
    arr = np.asarray(samples, dtype=np.uint16)
    if arr.ndim == 2:
        arr = arr[None]
    c, h, w = arr.shape
    return Frame(width=w, height=h, channels=c, bit_depth=bit_depth,
                 samples=np.ascontiguousarray(arr), source_id=source_id)


def random_frame(rng, width, height, channels=1, bit_depth=10):
    samples = rng.integers(0, 1 << bit_depth,
                           size=(channels, height, width)).astype(np.uint16)
    return make_frame(samples, bit_depth)


def gradient_frame(width=192, height=192, bit_depth=10, slope=(3.0, 1.0),
                   noise_sigma=0.0, seed=0, channels=1):
    """Smooth linear ramp, optionally with mild Gaussian noise."""
    maxv = (1 << bit_depth) - 1
    y, x = np.mgrid[0:height, 0:width]
    base = slope[0] * x + slope[1] * y
    base = base / base.max() * (0.9 * maxv)
    rng = np.random.default_rng(seed)
    planes = []
    for c in range(channels):
        plane = base * (1.0 - 0.15 * c)
        if noise_sigma > 0:
            plane = plane + rng.normal(0.0, noise_sigma, base.shape)
        planes.append(np.clip(np.rint(plane), 0, maxv))
    return make_frame(np.stack(planes).astype(np.uint16), bit_depth)


# ---------------------------------------------------------------------------
# DPX builder (test-side oracle writer, bit-for-bit independent of dpx.py)

DPX_HEADER_SIZE = 2048


def build_dpx(samples, bit_depth=10, big_endian=True, descriptor=50,
              filename=b"clip_0001.dpx", creator=b"unit-scanner",
              create_time=b"2026-08-24T10:00:00", frame_position=None,
              data_offset=DPX_HEADER_SIZE):
    """Serialize (h, w, c) uint16 samples into DPX bytes."""
    samples = np.asarray(samples, dtype=np.uint16)
    h, w, c = samples.shape
    assert (descriptor, c) in ((50, 3), (6, 1))
    bo = ">" if big_endian else "<"
    hdr = bytearray(DPX_HEADER_SIZE)
    hdr[0:4] = b"SDPX" if big_endian else b"XPDS"
    struct.pack_into(bo + "I", hdr, 4, data_offset)
    hdr[36:36 + len(filename)] = filename
    hdr[136:136 + len(create_time)] = create_time
    hdr[160:160 + len(creator)] = creator
    struct.pack_into(bo + "I", hdr, 772, w)
    struct.pack_into(bo + "I", hdr, 776, h)
    hdr[780 + 20] = descriptor
    hdr[780 + 21] = 2                       # linear transfer
    hdr[780 + 23] = bit_depth
    struct.pack_into(bo + "H", hdr, 780 + 24, 1 if bit_depth in (10, 12) else 0)
    struct.pack_into(bo + "I", hdr, 780 + 28, data_offset)
    struct.pack_into(bo + "I", hdr, 1712,
                     0xFFFFFFFF if frame_position is None else frame_position)

    flat = samples.reshape(-1).astype(np.uint32)
    if bit_depth == 10:
        pad = (-len(flat)) % 3
        flat = np.concatenate([flat, np.zeros(pad, np.uint32)])
        words = (flat[0::3] << 22) | (flat[1::3] << 12) | (flat[2::3] << 2)
        payload = words.astype(bo + "u4").tobytes()
    elif bit_depth == 12:
        payload = (flat.astype(np.uint16) << 4).astype(bo + "u2").tobytes()
    else:
        payload = flat.astype(bo + "u2").tobytes()
    return bytes(hdr) + payload


# ---------------------------------------------------------------------------
# the 32-frame synthetic corpus (criteria 3, 4, 7, 8)

CORPUS_SIZE = 32


def _chart(width, height, maxv, block):
    """High-contrast resolution chart: checkerboard of near-black and
    near-white patches under a gentle illumination ripple (a perfectly
    bilevel frame is not representative of scanned test charts)."""
    y, x = np.mgrid[0:height, 0:width]
    hi, lo = 0.957 * maxv, 0.059 * maxv
    img = np.where(((x // block) + (y // block)) % 2 == 1, hi, lo)
    img = img + 0.008 * maxv * (np.sin(x / 5.1) + np.cos(y / 6.3))
    return np.clip(np.rint(img), 0, maxv)


def _text_overlay(width, height, maxv, seed):
    """Gradient background with bright rectangular 'glyph' strokes."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width]
    img = (x + y) / (width + height) * 0.5 * maxv
    for _ in range(120):
        gx = rng.integers(0, width - 6)
        gy = rng.integers(0, height - 10)
        gw = rng.integers(2, 6)
        gh = rng.integers(4, 10)
        img[gy:gy + gh, gx:gx + gw] = maxv
    return img


def _grain(width, height, maxv, sigma, seed):
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width]
    base = (np.sin(x / 37.0) + np.cos(y / 29.0) + 2.0) / 4.0 * (0.8 * maxv)
    return np.clip(base + rng.normal(0.0, sigma, base.shape), 0, maxv)


@lru_cache(maxsize=1)
def make_corpus():
    """Returns a list of (name, Frame, is_smooth) tuples, length 32.

    The smooth half (16 frames) is gradients plus mild noise -- the graded
    interpositive regime; the hard half is grain simulation, high-contrast
    charts and text overlays.
    """
    corpus = []
    # smooth half: varied slope/noise/bit-depth gradients
    for i in range(16):
        bd = (10, 10, 12, 16)[i % 4]
        frame = gradient_frame(
            width=192, height=192, bit_depth=bd,
            slope=((i % 5) + 1.0, (i % 3) + 0.5),
            noise_sigma=0.5 + 0.125 * i, seed=100 + i,
            channels=3 if i % 8 == 7 else 1)
        corpus.append(("smooth_%02d" % i, frame, True))
    # hard half
    for i in range(6):
        maxv = 1023
        img = _grain(192, 192, maxv, sigma=6.0 + 1.5 * i, seed=200 + i)
        corpus.append(("grain_%02d" % i,
                       make_frame(np.rint(img).astype(np.uint16), 10), False))
    for i, block in enumerate((8, 12, 16, 24, 32)):
        maxv = 1023
        img = _chart(192, 192, maxv, block)
        corpus.append(("chart_%02d" % i,
                       make_frame(img.astype(np.uint16), 10), False))
    for i in range(5):
        maxv = 1023
        img = _text_overlay(192, 192, maxv, seed=300 + i)
        corpus.append(("text_%02d" % i,
                       make_frame(np.rint(img).astype(np.uint16), 10), False))
    assert len(corpus) == CORPUS_SIZE
    return corpus


@pytest.fixture(scope="session")
def corpus():
    return make_corpus()


@pytest.fixture()
def rng():
    return np.random.default_rng(20260824)
