"""MIMO-OTFS link simulation with MRC-based and neural symbol detectors."""

__version__ = "0.1.0"
