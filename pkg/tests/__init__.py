"""Tests for passage-kit."""
