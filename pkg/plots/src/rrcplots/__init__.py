from .render import KINDS, PlotSpec, RenderError, default_specs, render

__version__ = "0.1.0"

__all__ = ["KINDS", "PlotSpec", "RenderError", "default_specs", "render",
           "__version__"]
