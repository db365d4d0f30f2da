"""Quadrature for volumes and surfaces implicitly defined by polynomial
level sets on hyperrectangles and simplices."""

from .bernstein import BoxMap, TensorPoly, from_monomial, poly_on_box
from .errors import DegenerateGeometryError, NumericalError

__all__ = [
    "BoxMap",
    "TensorPoly",
    "from_monomial",
    "poly_on_box",
    "DegenerateGeometryError",
    "NumericalError",
]

__version__ = "0.1.0"
