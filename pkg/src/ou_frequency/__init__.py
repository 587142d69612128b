"""OU Frequency - frequency functions of drift eigenfunctions, computed and checked."""

__version__ = "0.1.0"

__all__ = ["__version__"]
