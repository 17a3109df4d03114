"""Privacy-preserving splitting and cost-aware hybrid-cloud scheduling of patch grids."""

__version__ = "0.1.0"
