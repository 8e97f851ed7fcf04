"""Tests for ghz-robustness."""
