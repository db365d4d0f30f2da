"""Exception types shared across the package."""

__all__ = ["DegenerateGeometryError", "NumericalError"]


class DegenerateGeometryError(Exception):
    """Input geometry is degenerate (e.g. a polynomial factor shared between
    level sets, an interface lying exactly in a cell face, or an identically
    zero resultant).  Such inputs are ill-posed for quadrature purposes and
    are surfaced to the caller instead of being silently patched over."""


class NumericalError(Exception):
    """A numerical kernel failed to converge (e.g. an eigensolver)."""
