"""Fractional capacitary problems in the plane: explicit constants, moving
planes geometry, a cell solver for the fractional Laplacian and stability
checks."""

__version__ = "0.1.0"
