"""Exception types shared across the toolkit."""


class PtychoError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(PtychoError):
    """Array has the wrong shape (non-square, empty, or mismatched sizes)."""


class GeometryError(PtychoError):
    """Physical or sampling geometry is invalid (aperture off-grid, bad lengths)."""


class LayoutError(PtychoError):
    """Requested chart layout does not fit on the grid."""


class InputError(PtychoError):
    """Invalid argument combination or malformed input data."""


class NumericalError(PtychoError):
    """Non-finite values appeared during iteration."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class ConfigError(PtychoError):
    """Experiment config file failed to parse or validate."""


class ChecksumError(PtychoError):
    """A dataset file is missing or does not match its recorded checksum."""
