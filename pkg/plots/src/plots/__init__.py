"""Scaling figures + fitted-slope sidecars for probelab bench CSVs."""

from .render import FigureSpec, RenderError, fit_loglog, render_scaling

__all__ = ["FigureSpec", "RenderError", "fit_loglog", "render_scaling"]
