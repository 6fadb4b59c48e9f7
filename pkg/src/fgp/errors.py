"""Error types shared across the pipeline."""


class FgpError(Exception):
    """Base class for pipeline errors."""


class DecodeError(FgpError):
    """Malformed or truncated image data."""


class UnsupportedFormatError(FgpError):
    """Image format not handled (only PNG, JPEG, PPM P6 are)."""


class BoundsError(FgpError):
    """A region falls outside its image."""


class ArgumentError(FgpError):
    """Invalid argument to an operation."""


class ConfigError(FgpError):
    """Bad configuration or missing/invalid data file."""


class FormatError(FgpError):
    """Corrupt serialized artifact (vocabulary, model, feature cache)."""


class ConfigMismatchError(FgpError):
    """Artifact was produced under a different configuration."""


class StaleCacheError(FgpError):
    """Cached stage output does not match the active configuration."""


class IngestError(FgpError):
    """Manifest validation failure."""


class NoBackgroundError(FgpError):
    """Segmentation seed box leaves no background pixels."""
