"""Phase-only spatial light modulators as polarization quantum channels."""

__version__ = "0.1.0"
