"""Covert communication in IRS-assisted NOMA: detection analysis and rate optimisation."""

__version__ = "0.1.0"
