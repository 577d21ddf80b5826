"""Batch figure rendering for mirror-bounds experiment CSVs."""

from .figures import FigureSpec, SchemaError, load_rows, render

__version__ = "0.1.0"
