"""ML-MCTDHB - multi-layer MCTDH simulator for bosonic mixtures in 1D."""

__version__ = "0.1.0"
