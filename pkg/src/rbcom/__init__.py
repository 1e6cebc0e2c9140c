"""Resonant beam communication link simulator."""
