"""Pulse-controlled quantum battery: modulator-charger-battery simulation and analysis."""

__version__ = "0.1.0"

from .model import ModelParams  # noqa: E402

__all__ = ["ModelParams", "__version__"]
