"""Simulation kit for classical and quantum agent-environment interaction."""

__version__ = "0.1.0"
