"""Certificates and constructions for measures commuting with matrix minors."""

__version__ = "0.1.0"
