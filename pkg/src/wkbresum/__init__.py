"""Resummed WKB quantization for two-turning-point wells."""
__version__ = "0.1.0"
