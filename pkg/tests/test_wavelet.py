"""Lifting-transform tests: exact invertibility of both filters over
adversarial shapes, and the subband layout bookkeeping."""

import numpy as np
import pytest

from adaptix.codec import wavelet as wv

SHAPES = [(1, 1), (1, 7), (7, 1), (2, 2), (3, 3), (5, 7), (8, 8),
          (33, 96), (64, 64), (65, 63), (17, 128)]


@pytest.mark.parametrize("filt", ["53", "97"])
@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("levels", [0, 1, 2, 4, 6])
def test_perfect_reconstruction(filt, shape, levels):
    rng = np.random.default_rng(hash((filt, shape, levels)) & 0xFFFF)
    tile = rng.integers(-(1 << 15), 1 << 15, size=shape).astype(np.int64)
    coeffs = wv.forward_2d(tile.copy(), levels, filt)
    back = wv.inverse_2d(coeffs.copy(), levels, filt)
    assert np.array_equal(back, tile)


@pytest.mark.parametrize("filt", ["53", "97"])
def test_constant_signal_detail_is_zero(filt):
    tile = np.full((32, 32), 777, dtype=np.int64)
    coeffs = wv.forward_2d(tile.copy(), 3, filt)
    labels, nbands = wv.subband_layout(32, 32, 3)
    detail = coeffs[labels != 0]
    # integer lifting of a constant leaves at most rounding residue
    assert np.abs(detail).max() <= 1


def test_53_ramp_detail_vanishes():
    """The 5/3 predictor is exact for linear signals away from borders."""
    ramp = np.tile(np.arange(64, dtype=np.int64) * 3, (64, 1))
    coeffs = wv.forward_2d(ramp.copy(), 1, "53")
    hl = coeffs[:32, 32:]        # horizontal detail of a horizontal ramp
    assert np.abs(hl[:, :-1]).max() == 0


def test_effective_levels_shrinks_for_small_tiles():
    assert wv.effective_levels(64, 64, 4) == 4
    assert wv.effective_levels(1, 1, 4) == 0
    assert wv.effective_levels(2, 2, 4) == 1
    # a level applies as long as either axis still has >= 2 samples
    assert wv.effective_levels(8, 64, 4) == 4
    assert wv.effective_levels(1, 16, 5) == 4


def test_subband_layout_partition():
    labels, nbands = wv.subband_layout(64, 64, 4)
    assert nbands == 1 + 3 * 4
    assert labels.shape == (64, 64)
    assert set(np.unique(labels)) == set(range(nbands))
    # the final LL occupies the ceil-halved top-left corner
    assert labels[0, 0] == 0
    assert (labels[:4, :4] == 0).all()


def test_subband_layout_degenerate():
    labels, nbands = wv.subband_layout(1, 1, 4)
    assert nbands == 1
    assert labels[0, 0] == 0


def test_band_level_kind_roundtrip():
    labels, nbands = wv.subband_layout(64, 64, 3)
    kinds = {wv.band_level_kind(b)[1] for b in range(1, nbands)}
    assert kinds == {"HL", "LH", "HH"}
