"""Optimal rejecting measurements for quantum state detection."""
