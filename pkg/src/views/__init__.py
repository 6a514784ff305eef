"""Command-line surface and report writers."""
