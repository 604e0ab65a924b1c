"""Fiducial inference on sampled distribution surfaces."""

__version__ = "0.1.0"
