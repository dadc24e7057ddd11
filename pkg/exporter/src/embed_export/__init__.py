"""Batch sentence-embedding export to the .emb interchange format."""

__version__ = "0.1.0"
