"""Bolthausen-Sznitman block counting process and the Mittag-Leffler process."""

__version__ = "0.1.0"
