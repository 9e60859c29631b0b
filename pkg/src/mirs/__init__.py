"""Seeded Monte-Carlo simulator of mutual interference between automotive
LFM-CW radars: highway scene generation, beat-level IF synthesis, range-
Doppler processing, CFAR detection, and mitigation-technique sweeps."""

__version__ = "0.1.0"

from .errors import ConfigurationError

__all__ = ["ConfigurationError", "__version__"]
