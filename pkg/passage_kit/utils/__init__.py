"""Utility modules shared by the numerical packages and the CLI."""
