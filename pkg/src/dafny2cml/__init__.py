"""Dafny-IR to ML compiler with differential validation against a reference interpreter."""

__version__ = "0.1.0"
