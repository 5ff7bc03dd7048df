"""Boundary-integral numerics and matrix functional calculus on planar contours."""

__version__ = '0.1.0'
