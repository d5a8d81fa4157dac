"""Desk-scale adversarial attack benchmark for RGB-Event visual tracking."""

from .boxes import BBox

__version__ = "0.1.0"

__all__ = ["BBox", "__version__"]
