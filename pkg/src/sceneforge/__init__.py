"""Scene-graph-grounded 3D-language data factory and evaluation toolkit."""

__version__ = "0.1.0"
