class PlotsError(Exception):
    """Base error of the plotting package."""


class SchemaError(PlotsError):
    """A CSV artifact is missing, missing columns, or fails numeric parse."""


class NoDataError(PlotsError):
    """The requested plot kind has no data in the loaded result set."""
