"""Target-constrained bidirectional dialogue planning and plan-guided generation."""

__version__ = "0.1.0"
