"""Expressiveness measures for black-and-white line drawings."""

__version__ = "0.1.0"
