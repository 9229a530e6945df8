from .render import KINDS, PlotJob, SchemaError, read_table, render

__all__ = ["KINDS", "PlotJob", "SchemaError", "read_table", "render"]
