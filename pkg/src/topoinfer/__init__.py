"""Graph topology inference from bandlimited graph signals."""

__version__ = "0.1.0"
