"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI:
  input/format problems -> 2, quality-contract failures -> 1,
  anything unexpected -> 3.
"""


class AdaptixError(Exception):
    """Base class for all toolkit errors."""


# --- format / parsing errors (CLI exit code 2) ---

class FormatError(AdaptixError):
    pass


class TruncatedError(FormatError):
    pass


class BadMagicError(FormatError):
    pass


class UnsupportedPackingError(FormatError):
    pass


class BadDescriptorError(FormatError):
    pass


class UnsupportedTiffFeatureError(FormatError):
    pass


class DimensionOverflowError(FormatError):
    pass


class PayloadWithoutDepthTagError(FormatError):
    """Internal consistency failure: compressed payload written without a depth tag."""


# --- metric errors ---

class ShapeMismatchError(AdaptixError):
    pass


class FrameTooSmallError(AdaptixError):
    pass


# --- codec errors ---

class ParamInvalidError(AdaptixError):
    pass


class OutOfRangeError(AdaptixError):
    pass


class CorruptStreamError(FormatError):
    """Payload corruption, detected per tile.

    ``tile_indices`` lists the (tile_row, tile_col) pairs that failed.
    """

    def __init__(self, message, tile_indices=()):
        super().__init__(message)
        self.tile_indices = list(tile_indices)


class DimensionMismatchError(FormatError):
    pass


# --- controller errors (CLI exit code 1) ---

class UnattainableError(AdaptixError):
    """Quality thresholds unmet and lossless fallback disabled.

    Carries the best-effort result so callers can still inspect or keep it.
    """

    def __init__(self, message, stream=None, score=None, trace=None):
        super().__init__(message)
        self.stream = stream
        self.score = score
        self.trace = trace


# --- configuration errors (CLI exit code 2) ---

class ConfigError(AdaptixError):
    """Malformed configuration or manifest file: syntax, unknown key,
    uncoercible value, or unsupported schema version."""


# --- pipeline errors ---

class EmptyInputError(AdaptixError):
    pass


class OutputNotWritableError(AdaptixError):
    pass


class ZeroOriginalError(AdaptixError):
    pass


class JournalCorruptError(AdaptixError):
    """Raised only when a journal is unusable; partial damage is salvaged instead."""
