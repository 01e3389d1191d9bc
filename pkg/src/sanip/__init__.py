"""Decode stack for a camera-based shopping assistant for blind users.

Detection post-processing, EAN-13 / QR decoding, EXIT-sign matching, text
localization, and a debounced announcement pipeline.
"""
from .errors import (
    ConfigError,
    DecodeError,
    NotFoundError,
    ParseError,
    SanipError,
    StageError,
    UnavailableError,
    UncorrectableError,
)
from .raster import Image, load_pnm, read_image

__version__ = "0.1.0"
