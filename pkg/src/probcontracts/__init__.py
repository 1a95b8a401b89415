"""Compositional probabilistic verification with assume-guarantee contracts."""
