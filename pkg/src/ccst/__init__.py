"""Equation tutoring with live caregiver support suggestions."""

__version__ = "0.1.0"
