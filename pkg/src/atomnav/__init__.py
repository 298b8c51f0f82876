"""Desk-scale simulator of a cold-atom-beam interferometric inertial sensor."""

__version__ = "0.1.0"
