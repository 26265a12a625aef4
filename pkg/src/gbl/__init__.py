"""gbl: desk-scale numerics for the Gauss-map geometry of graph submanifolds."""

__version__ = "0.1.0"
