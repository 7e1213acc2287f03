"""Numerical laboratory for complete bounded complex curves in C^2.

Points of C^2 are stored as complex arrays of shape (..., 2).
"""

__version__ = "0.1.0"
