"""Repetition-and-superposition (RaS) codes over BIOS channels."""

__version__ = "0.1.0"
