"""Exception hierarchy shared across the package."""

from __future__ import annotations


class VidshieldError(Exception):
    """Base class for all errors raised by vidshield."""

    @property
    def kind(self) -> str:
        return type(self).__name__


class VideoFormatError(VidshieldError, ValueError):
    """Raised when a Y4M or PPM byte stream cannot be decoded."""


class MalformedHeader(VideoFormatError):
    pass


class UnsupportedColorspace(VideoFormatError):
    pass


class TruncatedFrame(VideoFormatError):
    pass


class UnsupportedMaxval(VideoFormatError):
    pass


class TruncatedPixels(VideoFormatError):
    pass


class InvalidSpec(VidshieldError, ValueError):
    """A corpus or sweep specification violates its invariants."""


class InsufficientLabels(VidshieldError, ValueError):
    pass


class LabelSetEmpty(VidshieldError, ValueError):
    pass
