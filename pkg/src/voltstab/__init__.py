"""Voltage stability of a radial network with an on-load tap changer and
voltage-dependent (ZIP) loads."""

__version__ = "0.1.0"
