"""Publication-style figures from wavetrainlab CSV/JSON artifacts.

Strictly a read-only consumer of the declared file schemas: values are
drawn and annotated verbatim, never recomputed.
"""

from .render import FigureSpec, ParseError, RenderResult, render

__all__ = ["FigureSpec", "RenderResult", "ParseError", "render"]
