"""Unit tests for ABSA components."""
