"""Figure rendering for decoh CSV outputs."""

__version__ = "0.1.0"

from .render import PLOT_KINDS, PlotJob, SchemaError, render

__all__ = ["PLOT_KINDS", "PlotJob", "SchemaError", "render", "__version__"]
