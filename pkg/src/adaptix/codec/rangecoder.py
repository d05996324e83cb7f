"""Adaptive binary range coder for quantized wavelet coefficients.

LZMA-style carry-aware range coder with 11-bit adaptive probabilities
(shift-5 update).  Coefficients are coded as:

  significance bit -> sign bit -> magnitude bit-length as adaptive unary
  -> two context-coded top residual bits -> remaining residual bits bypass.

Contexts are grouped per subband id; a fresh context table is used per tile
so tiles stay independently decodable.  The hot loops are numba-compiled.
"""

from __future__ import annotations

import numpy as np
from numba import njit

PROB_BITS = 11
PROB_INIT = 1 << (PROB_BITS - 1)   # 1024
ADAPT_SHIFT = 5
TOP = 1 << 24

# context slots per group
CTX_SIG = 0
CTX_SIGN = 1
CTX_UNARY = 2          # 2 .. 2+MAX_BITLEN-1
MAX_BITLEN = 24        # magnitudes < 2**24; larger means corruption
CTX_RES0 = 2 + MAX_BITLEN
CTX_RES1 = CTX_RES0 + 1
CTX_PER_GROUP = CTX_RES1 + 1


@njit(cache=True, nogil=True)
def _shift_low(low, cache, cache_size, out, pos):
    if low < 0xFF000000 or low > 0xFFFFFFFF:
        carry = low >> 32
        while cache_size > 0:
            out[pos] = (cache + carry) & 0xFF
            pos += 1
            cache = 0xFF
            cache_size -= 1
        cache = (low >> 24) & 0xFF
        cache_size = 1
    else:
        cache_size += 1
    low = (low << 8) & 0xFFFFFFFF
    return low, cache, cache_size, out, pos


@njit(cache=True, nogil=True)
def _enc_bit(low, rng, cache, cache_size, out, pos, probs, ctx, bit):
    p = probs[ctx]
    bound = (rng >> PROB_BITS) * p
    if bit == 0:
        rng = bound
        probs[ctx] = p + (((1 << PROB_BITS) - p) >> ADAPT_SHIFT)
    else:
        low += bound
        rng -= bound
        probs[ctx] = p - (p >> ADAPT_SHIFT)
    while rng < TOP:
        rng <<= 8
        low, cache, cache_size, out, pos = _shift_low(low, cache, cache_size, out, pos)
    return low, rng, cache, cache_size, pos


@njit(cache=True, nogil=True)
def _enc_bypass(low, rng, cache, cache_size, out, pos, bit):
    rng >>= 1
    if bit:
        low += rng
    while rng < TOP:
        rng <<= 8
        low, cache, cache_size, out, pos = _shift_low(low, cache, cache_size, out, pos)
    return low, rng, cache, cache_size, pos


@njit(cache=True, nogil=True)
def encode_coeffs(coeffs, groups, ngroups, out):
    """Encode int32 ``coeffs`` with per-group contexts into ``out`` (uint8).

    Returns the number of bytes written, or -1 if ``out`` is too small.
    """
    probs = np.full(ngroups * CTX_PER_GROUP, PROB_INIT, dtype=np.uint32)
    low = 0
    rng = 0xFFFFFFFF
    cache = 0
    cache_size = 1
    pos = 0
    limit = out.shape[0] - 64
    for i in range(coeffs.shape[0]):
        if pos >= limit:
            return -1
        c = coeffs[i]
        base = groups[i] * CTX_PER_GROUP
        if c == 0:
            low, rng, cache, cache_size, pos = _enc_bit(
                low, rng, cache, cache_size, out, pos, probs, base + CTX_SIG, 0)
            continue
        low, rng, cache, cache_size, pos = _enc_bit(
            low, rng, cache, cache_size, out, pos, probs, base + CTX_SIG, 1)
        if c < 0:
            m = -c
            sbit = 1
        else:
            m = c
            sbit = 0
        low, rng, cache, cache_size, pos = _enc_bit(
            low, rng, cache, cache_size, out, pos, probs, base + CTX_SIGN, sbit)
        # bit length of m, adaptive unary
        n = 0
        mm = m
        while mm > 0:
            mm >>= 1
            n += 1
        for k in range(n - 1):
            low, rng, cache, cache_size, pos = _enc_bit(
                low, rng, cache, cache_size, out, pos, probs, base + CTX_UNARY + k, 1)
        low, rng, cache, cache_size, pos = _enc_bit(
            low, rng, cache, cache_size, out, pos, probs, base + CTX_UNARY + (n - 1), 0)
        # residual bits below the leading one, MSB first
        for j in range(n - 2, -1, -1):
            bit = (m >> j) & 1
            idx = n - 2 - j   # 0 = top residual bit
            if idx == 0:
                low, rng, cache, cache_size, pos = _enc_bit(
                    low, rng, cache, cache_size, out, pos, probs, base + CTX_RES0, bit)
            elif idx == 1:
                low, rng, cache, cache_size, pos = _enc_bit(
                    low, rng, cache, cache_size, out, pos, probs, base + CTX_RES1, bit)
            else:
                low, rng, cache, cache_size, pos = _enc_bypass(
                    low, rng, cache, cache_size, out, pos, bit)
    for _ in range(5):
        low, cache, cache_size, out, pos = _shift_low(low, cache, cache_size, out, pos)
        if pos >= out.shape[0]:
            return -1
    return pos


@njit(cache=True, nogil=True)
def _dec_bit(code, rng, data, pos, probs, ctx):
    p = probs[ctx]
    bound = (rng >> PROB_BITS) * p
    if code < bound:
        bit = 0
        rng = bound
        probs[ctx] = p + (((1 << PROB_BITS) - p) >> ADAPT_SHIFT)
    else:
        bit = 1
        code -= bound
        rng -= bound
        probs[ctx] = p - (p >> ADAPT_SHIFT)
    while rng < TOP:
        rng <<= 8
        b = data[pos] if pos < data.shape[0] else 0
        code = ((code << 8) | b) & 0xFFFFFFFF
        pos += 1
    return bit, code, rng, pos


@njit(cache=True, nogil=True)
def _dec_bypass(code, rng, data, pos):
    rng >>= 1
    if code >= rng:
        bit = 1
        code -= rng
    else:
        bit = 0
    while rng < TOP:
        rng <<= 8
        b = data[pos] if pos < data.shape[0] else 0
        code = ((code << 8) | b) & 0xFFFFFFFF
        pos += 1
    return bit, code, rng, pos


@njit(cache=True, nogil=True)
def decode_coeffs(data, groups, ngroups, out):
    """Inverse of :func:`encode_coeffs`.  Returns 0 on success, 1 on desync."""
    probs = np.full(ngroups * CTX_PER_GROUP, PROB_INIT, dtype=np.uint32)
    if data.shape[0] < 5:
        return 1
    code = 0
    for i in range(1, 5):
        code = (code << 8) | data[i]
    pos = 5
    rng = 0xFFFFFFFF
    # allow the normalization loop to read a few phantom zero bytes at the
    # tail (mirrors the encoder flush), but an overrun beyond that is desync
    hard_limit = data.shape[0] + 5
    for i in range(out.shape[0]):
        if pos > hard_limit:
            return 1
        base = groups[i] * CTX_PER_GROUP
        bit, code, rng, pos = _dec_bit(code, rng, data, pos, probs, base + CTX_SIG)
        if bit == 0:
            out[i] = 0
            continue
        sbit, code, rng, pos = _dec_bit(code, rng, data, pos, probs, base + CTX_SIGN)
        n = 1
        while True:
            bit, code, rng, pos = _dec_bit(
                code, rng, data, pos, probs, base + CTX_UNARY + (n - 1))
            if bit == 0:
                break
            n += 1
            if n > MAX_BITLEN:
                return 1
        m = 1
        for j in range(n - 2, -1, -1):
            idx = n - 2 - j
            if idx == 0:
                bit, code, rng, pos = _dec_bit(code, rng, data, pos, probs, base + CTX_RES0)
            elif idx == 1:
                bit, code, rng, pos = _dec_bit(code, rng, data, pos, probs, base + CTX_RES1)
            else:
                bit, code, rng, pos = _dec_bypass(code, rng, data, pos)
            m = (m << 1) | bit
        out[i] = -m if sbit else m
    return 0
