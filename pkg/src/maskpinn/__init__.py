"""Mask-PINN training engine and benchmark harness."""

__version__ = "0.1.0"
