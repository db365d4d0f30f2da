"""Binary subcell masks isolating polynomial zeros and zero-set intersections.

A mask divides (0,1)^d into a regular grid of M x ... x M subcells (M a power
of two) and marks each subcell with 1 if it may contain relevant interface
geometry and 0 if it provably does not.  The certificates come from orthant
tests on Bernstein coefficients: if some constant combination alpha*f + beta*g
has coefficients of uniform strict sign on a (slightly expanded) subregion,
then f and g share no root there.  Masks may over-report, never under-report.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .bernstein import TensorPoly, elevate, restrict_box

__all__ = [
    "Mask",
    "full_mask",
    "empty_mask",
    "orthant_test",
    "intersection_mask",
    "nonzero_mask",
    "collapse_mask",
    "face_restriction_mask",
    "default_overlap",
]


@dataclass(frozen=True)
class Mask:
    """Immutable binary grid over the M^d subcells of (0,1)^d."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.ascontiguousarray(np.asarray(self.bits, dtype=bool))
        if b.ndim < 1:
            raise ValueError("mask must have at least one axis")
        if any(s != b.shape[0] for s in b.shape):
            raise ValueError("mask grid must have equal extent per axis")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def dims(self) -> int:
        return self.bits.ndim

    @property
    def cells_per_axis(self) -> int:
        return self.bits.shape[0]

    @property
    def nonempty(self) -> bool:
        return bool(self.bits.any())

    def cell_of(self, point) -> tuple[int, ...]:
        """Index of the subcell containing a point of (0,1)^d."""
        m = self.cells_per_axis
        idx = np.floor(np.asarray(point, dtype=float) * m).astype(int)
        return tuple(int(v) for v in np.clip(idx, 0, m - 1))


def full_mask(dims: int, cells_per_axis: int = 8) -> Mask:
    return Mask(np.ones((cells_per_axis,) * dims, dtype=bool))


def empty_mask(dims: int, cells_per_axis: int = 8) -> Mask:
    return Mask(np.zeros((cells_per_axis,) * dims, dtype=bool))


def default_overlap(cells_per_axis: int) -> float:
    """Subcell overlap guarding against roundoff on shared borders
    (about 1% of a subcell width)."""
    return 2.0**-6 / cells_per_axis


def _exists_alpha(f: np.ndarray, g: np.ndarray) -> bool:
    """True if some alpha makes f + alpha*g strictly positive coefficientwise."""
    zero = g == 0.0
    if np.any(f[zero] <= 0.0):
        return False
    lo, hi = -np.inf, np.inf
    pos = g > 0.0
    if pos.any():
        lo = np.max(-f[pos] / g[pos])
    neg = g < 0.0
    if neg.any():
        hi = np.min(-f[neg] / g[neg])
    return lo < hi


def orthant_test(f_coeffs, g_coeffs) -> bool:
    """Certify that two equal-length Bernstein coefficient vectors admit a
    uniformly signed constant combination.

    Returns True iff there exist alpha, beta with alpha*f + beta*g strictly
    positive (or strictly negative) in every coefficient, which proves f and
    g share no root on the underlying box.  Comparisons are exact; a failed
    test proves nothing.
    """
    f = np.ravel(np.asarray(f_coeffs, dtype=float))
    g = np.ravel(np.asarray(g_coeffs, dtype=float))
    if f.shape != g.shape:
        raise ValueError("coefficient vectors must have equal length")
    # Covers beta=0, alpha=0 and both sign conventions: any combination
    # alpha*f + beta*g > 0 rescales to f + a*g > 0 or -f + a*g > 0.
    return _exists_alpha(f, g) or _exists_alpha(-f, g)


def _match_degrees(f: TensorPoly, g: TensorPoly) -> tuple[TensorPoly, TensorPoly]:
    for ax in range(f.dims):
        nf, ng = f.coeffs.shape[ax] - 1, g.coeffs.shape[ax] - 1
        if nf < ng:
            f = elevate(f, ax, ng)
        elif ng < nf:
            g = elevate(g, ax, nf)
    return f, g


def intersection_mask(f: TensorPoly, f_mask: Mask, g: TensorPoly, g_mask: Mask) -> Mask:
    """Mask of subcells that may contain a shared root of f and g.

    A bit is 0 iff the input masks already exclude the subcell or an orthant
    test proves f and g share no real root on the expanded subcell.  The
    recursive halving descent requires the grid extent to be a power of two.
    """
    if f.dims != g.dims:
        raise ValueError("polynomials must share dims")
    if f_mask.dims != f.dims or g_mask.dims != f.dims:
        raise ValueError("masks must match polynomial dims")
    m = f_mask.cells_per_axis
    if g_mask.cells_per_axis != m:
        raise ValueError("masks must share cells_per_axis")
    if m & (m - 1) != 0:
        raise ValueError("cells_per_axis must be a power of two")

    d = f.dims
    eps = default_overlap(m)
    combined = f_mask.bits & g_mask.bits
    bits = np.zeros((m,) * d, dtype=bool)

    def examine(a: np.ndarray, b: np.ndarray) -> None:
        region = tuple(slice(ai, bi) for ai, bi in zip(a, b))
        if not combined[region].any():
            return
        xa = a / m - eps
        xb = b / m + eps
        fr = restrict_box(f, xa, xb)
        gr = restrict_box(g, xa, xb)
        fr, gr = _match_degrees(fr, gr)
        if orthant_test(fr.coeffs, gr.coeffs):
            return
        if np.all(b - a == 1):
            bits[tuple(a)] = True
            return
        half = (b - a) // 2
        for corner in product((0, 1), repeat=d):
            c = a + np.asarray(corner) * half
            examine(c, c + half)

    examine(np.zeros(d, dtype=int), np.full(d, m, dtype=int))
    return Mask(bits)


def nonzero_mask(f: TensorPoly, f_mask: Mask) -> Mask:
    """Mask of subcells on which f may vanish.

    Specialisation of ``intersection_mask`` against the zero polynomial: a
    bit is 0 iff the input mask excludes the subcell or f has provably
    uniform sign on the expanded subcell."""
    zero = TensorPoly(np.zeros((1,) * f.dims))
    return intersection_mask(f, f_mask, zero, full_mask(f.dims, f_mask.cells_per_axis))


def collapse_mask(m: Mask, k: int) -> Mask:
    """OR-collapse along direction k, producing a (d-1)-dimensional mask."""
    if m.dims < 2:
        raise ValueError("collapse requires dims >= 2")
    return Mask(m.bits.any(axis=k))


def face_restriction_mask(m: Mask, k: int, side: int) -> Mask:
    """Slice of the mask at the lower (side=0) or upper (side=1) face."""
    if m.dims < 2:
        raise ValueError("face restriction requires dims >= 2")
    if side not in (0, 1):
        raise ValueError("side must be 0 or 1")
    idx = side * (m.cells_per_axis - 1)
    return Mask(np.take(m.bits, idx, axis=k))
