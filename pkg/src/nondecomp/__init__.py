"""Training small neural networks directly on non-decomposable performance measures."""
__version__ = "0.1.0"
