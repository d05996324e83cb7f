"""Every tunable constant of the tile codec, in one place.

Alternate implementations reproducing these constants byte-for-byte will
produce identical streams (see docs/FORMAT.md).
"""

MAGIC = b"ATC1"
VERSION = 1
CODEC_VERSION = "atc1-1"

TILE_SIZE = 64
DEFAULT_LEVELS = 4

# q in [0, 100] maps to a base quantizer step 1 .. 256.
Q_STEP_EXP_DIV = 12.5

# Quantizer steps below 1 code sub-integer precision that integer samples
# cannot use; clamp.
MIN_STEP = 1.0

# Deadzone width is 2*step for AC bands (truncation toward zero);
# the LL band uses a plain rounding quantizer.

# Samples are level-shifted by 2^(bit_depth-1) before the transform.

# Per-tile step multipliers are stored as unsigned 16-bit fixed point.
MOD_FIX = 4096
MOD_MIN = 0.25
MOD_MAX = 4.0

# Step multiplier per subband = 1 / (L2 norm of the synthesis basis),
# measured numerically from the integer lifting implementations.
# Keyed by filter, band kind, then number of synthesis stages the band
# feeds (1 = finest level, up to 6).
SYNTH_GAIN = {
    "53": {
        "LL": (1.5000, 2.7500, 5.3750, 10.6875, 21.3438, 42.6719),
        "HL": (1.0383, 1.5922, 2.9197, 5.7028, 11.3367, 22.6417),
        "LH": (1.0383, 1.5922, 2.9197, 5.7028, 11.3367, 22.6417),
        "HH": (0.7188, 0.9219, 1.5859, 3.0430, 6.0208, 12.0095),
    },
    "97": {
        "LL": (1.2995, 1.8008, 2.4293, 3.2300, 4.2769, 5.6556),
        "HL": (1.0116, 1.3197, 1.8276, 2.4634, 3.2749, 4.3360),
        "LH": (1.0116, 1.3197, 1.8276, 2.4634, 3.2749, 4.3360),
        "HH": (0.7872, 0.9675, 1.3753, 1.8803, 2.5108, 3.3286),
    },
}


def band_step_factor(filt: str, kind: str, stages: int) -> float:
    gains = SYNTH_GAIN[filt][kind]
    stages = min(stages, len(gains))
    return 1.0 / gains[stages - 1]
