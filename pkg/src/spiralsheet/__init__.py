"""Self-similar m-fold algebraic spiral vortex sheets for the 2-D Euler equations."""

__version__ = "0.1.0"
