"""Tests for the mlmctdhb package."""
