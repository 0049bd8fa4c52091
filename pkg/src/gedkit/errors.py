"""Shared exception types."""


class DataError(ValueError):
    """Malformed input data or file contents (CLI exit code 2)."""
