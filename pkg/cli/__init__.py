"""Command-line module initialization."""
