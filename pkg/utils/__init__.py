"""Utility module initialization."""
