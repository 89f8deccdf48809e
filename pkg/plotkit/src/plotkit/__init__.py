"""Offline rendering of experiment CSVs into figure families."""

from .render import PlotJob, RenderInfo, render
from .schemas import SUPPORTED_SCHEMA_VERSION, SchemaError

__version__ = "0.1.0"
