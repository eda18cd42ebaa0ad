"""Offline transformer embedding exporter.

Runs a frozen pre-trained encoder over a tweet JSON Lines stream and
writes the TEB1 binary embedding file consumed by the summarizer.
"""

from .export import export

__all__ = ["export"]
__version__ = "0.1.0"
