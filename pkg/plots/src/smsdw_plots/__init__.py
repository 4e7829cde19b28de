"""Paper-style figures from simulator output files (CSV and raw dumps)."""

__version__ = "0.1.0"

from .figures import FigureSpec, build_figure, render

__all__ = ["FigureSpec", "build_figure", "render"]
