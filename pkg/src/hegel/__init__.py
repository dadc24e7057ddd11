"""Extractive long-document summarization with sentence-level hypergraphs."""

__version__ = "0.1.0"
