"""Integer lifting wavelet transforms used by the tile codec.

Two filter banks:

* 5/3 ("LeGall"): fully reversible integer lifting, used for the lossless
  path.
* 9/7 (CDF): lifting with fixed-point integer constants so streams are
  bit-exact across platforms.  The usual K scaling factors are folded into
  the per-subband quantizer gains instead of the transform, which keeps the
  integer lifting exactly invertible; loss comes only from quantization.

Boundary handling is whole-sample symmetric extension, so any tile size
down to 1x1 transforms cleanly.  Both transforms operate in place on a 2D
int64 array in the standard quadrant layout (low-pass toward index 0).
"""

from __future__ import annotations

import numpy as np

# 9/7 lifting constants in Q16 fixed point (round(c * 2**16)).
FIX_SHIFT = 16
FIX_ROUND = 1 << (FIX_SHIFT - 1)
A97 = -103949   # alpha = -1.586134342
B97 = -3472     # beta  = -0.052980118
C97 = 57862     # gamma =  0.882911075
D97 = 29066     # delta =  0.443506852


def _split(x):
    return x[..., 0::2], x[..., 1::2]


def _predict_pairs(e, n):
    """e[i] + e[i+1] for each odd position, with symmetric tail extension."""
    if n % 2 == 0:
        epad = np.concatenate([e, e[..., -1:]], axis=-1)
    else:
        epad = e
    return epad[..., :-1], epad[..., 1:]


def _update_pairs(d, n):
    """d[i-1] + d[i] for each even position, with symmetric head/tail extension."""
    dpad = np.concatenate([d[..., 0:1], d], axis=-1)
    if n % 2 == 1:
        dpad = np.concatenate([dpad, d[..., -1:]], axis=-1)
    return dpad[..., :-1], dpad[..., 1:]


def _fwd53_1d(x):
    n = x.shape[-1]
    if n < 2:
        return x.copy(), x[..., :0]
    e, o = _split(x)
    pl, pr = _predict_pairs(e, n)
    d = o - ((pl + pr) >> 1)
    ul, ur = _update_pairs(d, n)
    s = e + ((ul + ur + 2) >> 2)
    return s, d


def _inv53_1d(s, d, n):
    if n < 2:
        return s.copy()
    ul, ur = _update_pairs(d, n)
    e = s - ((ul + ur + 2) >> 2)
    pl, pr = _predict_pairs(e, n)
    o = d + ((pl + pr) >> 1)
    return _interleave(e, o, n)


def _fwd97_1d(x):
    n = x.shape[-1]
    if n < 2:
        return x.copy(), x[..., :0]
    e, o = _split(x)
    pl, pr = _predict_pairs(e, n)
    d = o + ((A97 * (pl + pr) + FIX_ROUND) >> FIX_SHIFT)
    ul, ur = _update_pairs(d, n)
    s = e + ((B97 * (ul + ur) + FIX_ROUND) >> FIX_SHIFT)
    pl, pr = _predict_pairs(s, n)
    d = d + ((C97 * (pl + pr) + FIX_ROUND) >> FIX_SHIFT)
    ul, ur = _update_pairs(d, n)
    s = s + ((D97 * (ul + ur) + FIX_ROUND) >> FIX_SHIFT)
    return s, d


def _inv97_1d(s, d, n):
    if n < 2:
        return s.copy()
    ul, ur = _update_pairs(d, n)
    s = s - ((D97 * (ul + ur) + FIX_ROUND) >> FIX_SHIFT)
    pl, pr = _predict_pairs(s, n)
    d = d - ((C97 * (pl + pr) + FIX_ROUND) >> FIX_SHIFT)
    ul, ur = _update_pairs(d, n)
    e = s - ((B97 * (ul + ur) + FIX_ROUND) >> FIX_SHIFT)
    pl, pr = _predict_pairs(e, n)
    o = d - ((A97 * (pl + pr) + FIX_ROUND) >> FIX_SHIFT)
    return _interleave(e, o, n)


def _interleave(e, o, n):
    out = np.empty(e.shape[:-1] + (n,), dtype=e.dtype)
    out[..., 0::2] = e
    out[..., 1::2] = o
    return out


_FWD = {"53": _fwd53_1d, "97": _fwd97_1d}
_INV = {"53": _inv53_1d, "97": _inv97_1d}


def effective_levels(height: int, width: int, levels: int) -> int:
    """Number of levels actually applied; each level needs a 2-sample extent."""
    lv = 0
    h, w = height, width
    while lv < levels and max(h, w) >= 2:
        h = (h + 1) // 2
        w = (w + 1) // 2
        lv += 1
    return lv


def forward_2d(tile: np.ndarray, levels: int, filt: str) -> np.ndarray:
    """Multi-level 2D transform into quadrant layout. ``tile`` is int64 (h, w)."""
    out = tile.astype(np.int64, copy=True)
    fwd = _FWD[filt]
    h, w = out.shape
    for _ in range(effective_levels(h, w, levels)):
        sub = out[:h, :w]
        # rows
        if w >= 2:
            s, d = fwd(sub)
            sub[:, : s.shape[1]] = s
            sub[:, s.shape[1]:] = d
        # columns
        if h >= 2:
            s, d = fwd(sub.T)
            sub[: s.shape[1], :] = s.T
            sub[s.shape[1]:, :] = d.T
        h = (h + 1) // 2
        w = (w + 1) // 2
    return out


def inverse_2d(coeffs: np.ndarray, levels: int, filt: str) -> np.ndarray:
    """Exact inverse of :func:`forward_2d`."""
    out = coeffs.astype(np.int64, copy=True)
    inv = _INV[filt]
    h0, w0 = out.shape
    lv = effective_levels(h0, w0, levels)
    dims = []
    h, w = h0, w0
    for _ in range(lv):
        dims.append((h, w))
        h = (h + 1) // 2
        w = (w + 1) // 2
    for h, w in reversed(dims):
        sub = out[:h, :w]
        hs = (h + 1) // 2
        ws = (w + 1) // 2
        # columns
        if h >= 2:
            rec = inv(sub[:hs, :].T, sub[hs:, :].T, h)
            sub[:, :] = rec.T
        # rows
        if w >= 2:
            rec = inv(sub[:, :ws], sub[:, ws:], w)
            sub[:, :] = rec
    return out


def subband_layout(height: int, width: int, levels: int):
    """Subband id per coefficient position in quadrant layout.

    Returns (labels, nbands) where ``labels`` is an int32 (h, w) array.
    Ids: 0 = final LL; then per level from the deepest outward,
    1 + 3*(lv_from_deepest) + {0: HL, 1: LH, 2: HH}.
    """
    lv = effective_levels(height, width, levels)
    labels = np.zeros((height, width), dtype=np.int32)
    h, w = height, width
    dims = []
    for _ in range(lv):
        dims.append((h, w))
        h = (h + 1) // 2
        w = (w + 1) // 2
    # dims[i] is the extent at level i+1's input; deepest is dims[-1]
    for i, (hh, ww) in enumerate(dims):
        hs = (hh + 1) // 2
        ws = (ww + 1) // 2
        depth_from_deepest = lv - 1 - i
        base = 1 + 3 * depth_from_deepest
        labels[:hs, ws:ww] = base + 0   # HL (horizontal high-pass)
        labels[hs:hh, :ws] = base + 1   # LH
        labels[hs:hh, ws:ww] = base + 2  # HH
    return labels, 1 + 3 * lv


def band_level_kind(band_id: int):
    """Map a subband id back to (level_from_deepest starting at 1, kind).

    kind: 'LL', 'HL', 'LH', 'HH'.  Level 1 is the deepest decomposition.
    """
    if band_id == 0:
        return 1, "LL"
    depth, kind = divmod(band_id - 1, 3)
    return depth + 1, ("HL", "LH", "HH")[kind]
