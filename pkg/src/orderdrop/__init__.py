"""Ordered-dropout networks and a heterogeneous federated-learning simulator."""

__version__ = "0.1.0"
