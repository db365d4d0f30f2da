"""One-dimensional quadrature rules: Gauss-Legendre and normalised tanh-sinh.

Both families are generated on the reference interval (-1,1) with strictly
interior nodes and strictly positive weights, and both integrate constants
exactly (tanh-sinh after weight normalisation), so any tensor construction
built from them preserves total measure exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "NodesWeights",
    "Scheme1D",
    "gauss_legendre",
    "tanh_sinh",
    "map_to_interval",
    "nodes_weights",
    "lambert_w",
]

_SCHEME_KINDS = ("gl", "ts")

# tanh(u) rounds to exactly 1.0 in double precision once u is large; keep the
# reference nodes strictly interior so mapped nodes never collide with
# interval endpoints.
_NODE_CLAMP = 1.0 - 1e-15

# Step-size constant in the Lambert W argument, tuned for the decay-to-zero
# endpoint behaviour typical of height-function integrands.
_STEP_C = 0.6

_SMALLEST_NORMAL = np.finfo(float).tiny


@dataclass(frozen=True)
class Scheme1D:
    """A 1-D scheme selection: kind "gl" or "ts" with q nodes."""

    kind: str
    q: int

    def __post_init__(self):
        if self.kind not in _SCHEME_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.q < 1:
            raise ValueError("q must be >= 1")


@dataclass(frozen=True)
class NodesWeights:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        n = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=float))
        if n.shape != w.shape or n.ndim != 1:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        n.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", n)
        object.__setattr__(self, "weights", w)


def lambert_w(z: float, tol: float = 1e-15) -> float:
    """Principal branch of w*exp(w) = z for z >= 0, via Halley iteration
    started at log(1+z)."""
    if z < 0:
        raise ValueError("only the nonnegative real axis is supported")
    if z == 0.0:
        return 0.0
    w = math.log1p(z)
    for _ in range(50):
        ew = math.exp(w)
        f = w * ew - z
        denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0)
        step = f / denom
        w -= step
        if abs(step) <= tol * (1.0 + abs(w)):
            return w
    return w


@lru_cache(maxsize=None)
def _gauss_legendre_cached(q: int) -> NodesWeights:
    x, w = leggauss(q)
    # Enforce exact symmetry about the midpoint.
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return NodesWeights(x, w)


def gauss_legendre(q: int) -> NodesWeights:
    """Gauss-Legendre nodes and weights on (-1,1); exact through degree 2q-1."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return _gauss_legendre_cached(q)


@lru_cache(maxsize=None)
def _tanh_sinh_cached(q: int) -> NodesWeights:
    if q == 1:
        return NodesWeights(np.array([0.0]), np.array([2.0]))
    h = (2.0 / q) * lambert_w(_STEP_C * math.pi * (q - 1))
    ell = np.arange(1, q + 1)
    if q % 2 == 1:
        t = h * (ell // 2) * (-1.0) ** ell
    else:
        t = h * (np.ceil(ell / 2.0) - 0.5) * (-1.0) ** ell
    u = 0.5 * math.pi * np.sinh(t)
    x = np.tanh(u)
    w = 0.5 * h * math.pi * np.cosh(t) / np.cosh(u) ** 2
    w = np.maximum(w, _SMALLEST_NORMAL)
    order = np.argsort(t)
    x, w = x[order], w[order]
    x = np.clip(x, -_NODE_CLAMP, _NODE_CLAMP)
    w *= 2.0 / w.sum()
    return NodesWeights(x, w)


def tanh_sinh(q: int) -> NodesWeights:
    """Normalised tanh-sinh (double-exponential) rule on (-1,1).

    The trapezoid abscissae use step h = (2/q) * W(0.6*pi*(q-1)); weights are
    rescaled so they sum to exactly 2, and q = 1 is the midpoint rule."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return _tanh_sinh_cached(q)


def nodes_weights(kind: str, q: int) -> NodesWeights:
    if kind == "gl":
        return gauss_legendre(q)
    if kind == "ts":
        return tanh_sinh(q)
    raise ValueError(f"unknown scheme kind {kind!r}")


def map_to_interval(nw: NodesWeights, a: float, b: float) -> NodesWeights:
    """Affine image of a reference rule on (a,b); weights scale by (b-a)/2."""
    if not b > a:
        raise ValueError(f"degenerate interval ({a}, {b})")
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return NodesWeights(mid + half * nw.nodes, half * nw.weights)
