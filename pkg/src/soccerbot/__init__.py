"""Desk-scale humanoid soccer control stack."""

__version__ = "0.1.0"
