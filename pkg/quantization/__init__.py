"""Quantization module initialization."""
