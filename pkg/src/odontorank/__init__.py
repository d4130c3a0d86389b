"""Odontogram comparison and candidate ranking for forensic identification."""

__version__ = "0.1.0"
