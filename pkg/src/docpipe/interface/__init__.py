"""Batch CLI and the service API consumed by the review UI."""
