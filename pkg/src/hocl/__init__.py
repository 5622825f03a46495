"""Hebbian-oscillatory co-learning: coupled Kuramoto phases, gated Hebbian weights, Poincare-ball graphs."""

__version__ = "0.1.0"
