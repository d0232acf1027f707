"""Figure rendering for dynising harness CSVs (CSV-only coupling)."""

__version__ = "0.1.0"

from .core import FigureSpec, render  # noqa: F401
