"""Semantic knowledge base and search service for mathematical article collections."""

__version__ = "0.1.0"
