"""Exception types shared across the toolkit."""

from __future__ import annotations


class RegionKitError(Exception):
    """Base class for all toolkit errors."""


class InvalidBoxError(RegionKitError, ValueError):
    """A bounding box failed validation at construction."""


class DegenerateBoxError(InvalidBoxError):
    """A box has zero width or zero height."""


class EmptyMaskError(RegionKitError, ValueError):
    """A mask contains no component that survives the area filter."""


class MarkupError(RegionKitError, ValueError):
    """Base class for grounded-markup parse failures (strict mode)."""

    def __init__(self, message: str, position: int, fragment: str = ""):
        super().__init__(message)
        self.position = position
        self.fragment = fragment


class MalformedBoxError(MarkupError):
    """A <box> payload is not four in-range integers."""


class DanglingBoxError(MarkupError):
    """A <box> element appeared without a preceding <ref> group."""


class UnclosedTagError(MarkupError):
    """An opening tag has no matching closing tag."""


class RefWithoutBoxError(MarkupError):
    """A <ref> group carries no usable <box> element."""


class EmptyReferenceError(RegionKitError, ValueError):
    """An evaluation reference contains no object-region pairs."""


class EmptyCorpusError(RegionKitError, ValueError):
    """Aggregation was requested over zero samples."""


class TemplateError(RegionKitError, ValueError):
    """A template is structurally invalid."""


class MissingPlaceholderError(TemplateError):
    """A template placeholder cannot be filled from the given arguments."""


class TemplateDirectionMismatchError(TemplateError):
    """A template was used for the opposite conversion direction."""


class LexiconError(RegionKitError, ValueError):
    """An organ lexicon is structurally invalid."""


class TransportError(RegionKitError, RuntimeError):
    """A model transport failed to produce a usable response.

    Carries the partial trace of the run that was in flight, when one exists.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class TransportTimeoutError(TransportError):
    """All transport attempts for one logical call failed."""


class CorpusError(RegionKitError, ValueError):
    """A corpus file violates the record schema."""


class ConfigError(RegionKitError, ValueError):
    """A run configuration value is unusable."""
