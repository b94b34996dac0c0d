from __future__ import annotations


class ResourceCapError(RuntimeError):
    """A requested enumeration is larger than the configured cap."""


class InstanceError(ValueError):
    """An instance file is malformed or fails model validation."""
