"""Numerics for Weil-Petersson geometry: hyperbolic isometries, surface
groups, gradient pairings, strip variations of length and the model metric."""
from .errors import InputError, NumericFailure, WPLabError

__version__ = "0.1.0"
__all__ = ["InputError", "NumericFailure", "WPLabError", "__version__"]
