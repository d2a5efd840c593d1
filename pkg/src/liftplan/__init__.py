"""Lifted forward planning for relational factored MDPs with concurrent actions."""

__version__ = "0.1.0"
