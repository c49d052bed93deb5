"""Core simulation modules for netresilience."""
