"""Exception types shared across the toolkit."""


class SkigearsError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(SkigearsError, ValueError):
    """Tensor or array dimensions do not satisfy an operation's contract."""


class DataFormatError(SkigearsError, ValueError):
    """A CSV file, manifest, or archive does not match the expected layout."""


class ModelFormatError(SkigearsError, ValueError):
    """A model file is corrupt or has an unsupported version."""
