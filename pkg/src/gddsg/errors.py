"""Exception types shared across the package."""


class GddsgError(Exception):
    """Base class for all library errors."""


class FormatError(GddsgError):
    """A file does not conform to its binary or JSON schema."""


class BadMagicError(FormatError):
    """File starts with the wrong magic bytes or an unsupported version."""


class TruncatedError(FormatError):
    """Declared payload size does not match the bytes actually present."""


class NonFiniteError(FormatError):
    """Vector data contains NaN or infinity."""


class ManifestError(GddsgError):
    """Task manifest violates a structural rule (disjointness, contiguity)."""


class StateError(GddsgError):
    """Operation requires engine state that is absent or inconsistent."""


class DomainError(GddsgError):
    """Parameters fall outside the region where a formula is defined."""
