"""Tests for netresilience."""
