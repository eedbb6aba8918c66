"""Plotting companion for fluctlat CSV artifacts."""

from .errors import NoDataError, PlotsError, SchemaError
from .loader import ResultSet, load_results
from .render import KINDS, render

__all__ = [
    "KINDS",
    "NoDataError",
    "PlotsError",
    "ResultSet",
    "SchemaError",
    "load_results",
    "render",
]

__version__ = "0.1.0"
