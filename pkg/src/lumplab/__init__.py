"""Mass-lumping preconditioners, spectral bounds and explicit dynamics."""

__version__ = "0.1.0"
