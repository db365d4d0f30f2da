"""Tensor-product Bernstein polynomials on the reference box (0,1)^d.

A d-variate polynomial is stored as a dense coefficient tensor of shape
(n_1+1, ..., n_d+1), row-major with the last index varying fastest.  All
manipulations (evaluation, differentiation, degree elevation, subdivision,
restrictions) are built on the de Casteljau recurrence, which keeps every
kernel stable on and slightly beyond the reference box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "TensorPoly",
    "BoxMap",
    "evaluate",
    "differentiate",
    "elevate",
    "reduce_degree",
    "restrict_box",
    "line_restrict",
    "face_restrict",
    "interpolate",
    "from_monomial",
    "monomial_rebase",
    "poly_on_box",
    "chebyshev_nodes",
    "bernstein_basis_matrix",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TensorPoly:
    """Immutable tensor-product Bernstein polynomial on (0,1)^d.

    ``coeffs`` has shape (n_1+1, ..., n_d+1); entry ``c[i_1,...,i_d]``
    multiplies ``b_{i_1}^{n_1}(x_1) ... b_{i_d}^{n_d}(x_d)``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim < 1:
            raise ValueError("coefficient tensor must have at least one axis")
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def dims(self) -> int:
        return self.coeffs.ndim

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(s - 1 for s in self.coeffs.shape)

    def __call__(self, x):
        return evaluate(self, x)


@dataclass(frozen=True)
class BoxMap:
    """Affine map from the reference box (0,1)^d onto a hyperrectangle."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise ValueError("lo and hi must have the same length")
        if not all(b > a for a, b in zip(lo, hi)):
            raise ValueError("box must satisfy hi > lo componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dims(self) -> int:
        return len(self.lo)

    @property
    def widths(self) -> np.ndarray:
        return np.array(self.hi) - np.array(self.lo)

    @property
    def jacobian(self) -> float:
        return float(np.prod(self.widths))

    def to_physical(self, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(self.lo) + t * self.widths

    def to_reference(self, x):
        x = np.asarray(x, dtype=float)
        return (x - np.asarray(self.lo)) / self.widths


# ---------------------------------------------------------------------------
# de Casteljau kernels
# ---------------------------------------------------------------------------

def _decasteljau_axis(w: np.ndarray, axis: int, t: float) -> np.ndarray:
    """Collapse one tensor axis at parameter t (plain scalar de Casteljau)."""
    w = np.moveaxis(w, axis, 0)
    n = w.shape[0] - 1
    for _ in range(n):
        w = (1.0 - t) * w[:-1] + t * w[1:]
    return w[0]


def _eval_batch(c: np.ndarray, pts: np.ndarray) -> np.ndarray:
    m, d = pts.shape
    if d != c.ndim:
        raise ValueError(f"point dimension {d} does not match polynomial dims {c.ndim}")
    w = np.broadcast_to(c, (m,) + c.shape)
    for ax in range(d):
        n = w.shape[1] - 1
        if n == 0:
            w = w[:, 0]
            continue
        t = pts[:, ax].reshape((m,) + (1,) * (w.ndim - 1))
        for _ in range(n):
            w = (1.0 - t) * w[:, :-1] + t * w[:, 1:]
        w = w[:, 0]
    return np.asarray(w, dtype=float)


def evaluate(p: TensorPoly, x) -> float | np.ndarray:
    """Evaluate p at a point (shape (d,)) or a batch of points (shape (m,d)).

    Points may lie slightly outside [0,1]^d; the recurrence remains defined.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return float(_eval_batch(p.coeffs, x[None, :])[0])
    return _eval_batch(p.coeffs, x)


def differentiate(p: TensorPoly, k: int) -> TensorPoly:
    """Partial derivative along axis k; degree along k drops by one.

    A polynomial of degree 0 along k yields the zero polynomial of the same
    shape."""
    c = p.coeffs
    if not 0 <= k < c.ndim:
        raise ValueError(f"axis {k} out of range for dims {c.ndim}")
    n = c.shape[k] - 1
    if n == 0:
        return TensorPoly(np.zeros_like(c))
    w = np.moveaxis(c, k, 0)
    d = n * (w[1:] - w[:-1])
    return TensorPoly(np.moveaxis(d, 0, k))


@lru_cache(maxsize=None)
def _elevation_weights(n: int, r: int) -> np.ndarray:
    # Convex weights: rows sum to one, so elevation is unconditionally stable.
    E = np.zeros((n + r + 1, n + 1))
    for j in range(n + r + 1):
        den = math.comb(n + r, j)
        for i in range(max(0, j - r), min(n, j) + 1):
            E[j, i] = math.comb(n, i) * math.comb(r, j - i) / den
    E.setflags(write=False)
    return E


def elevate(p: TensorPoly, k: int, target_degree: int) -> TensorPoly:
    """Raise the Bernstein degree along axis k without changing values."""
    n = p.coeffs.shape[k] - 1
    if target_degree < n:
        raise ValueError(f"target degree {target_degree} below current degree {n}")
    if target_degree == n:
        return p
    E = _elevation_weights(n, target_degree - n)
    w = np.tensordot(E, np.moveaxis(p.coeffs, k, 0), axes=(1, 0))
    return TensorPoly(np.moveaxis(w, 0, k))


@lru_cache(maxsize=None)
def _reduction_pinv(n: int) -> np.ndarray:
    # Least-squares inverse of one-step elevation from degree n-1 to n.
    E = _elevation_weights(n - 1, 1)
    P = np.linalg.pinv(E)
    P.setflags(write=False)
    return P


def reduce_degree(p: TensorPoly, rel_tol: float = 1e-10) -> TensorPoly:
    """Strip representation degrees that carry no polynomial content.

    Along each axis, the degree is lowered one step at a time as long as the
    lower-degree least-squares fit reproduces the coefficients to within
    rel_tol of the overall coefficient scale.  Exactly degree-elevated input
    reduces losslessly; genuine leading content blocks the reduction.
    """
    c = p.coeffs
    scale = np.abs(c).max()
    if scale == 0.0:
        return TensorPoly(np.zeros((1,) * c.ndim))
    changed = True
    while changed:
        changed = False
        for ax in range(c.ndim):
            n = c.shape[ax] - 1
            if n < 1:
                continue
            w = np.moveaxis(c, ax, 0)
            low = np.tensordot(_reduction_pinv(n), w, axes=(1, 0))
            back = np.tensordot(_elevation_weights(n - 1, 1), low, axes=(1, 0))
            if np.abs(back - w).max() <= rel_tol * scale:
                c = np.moveaxis(low, 0, ax)
                changed = True
    return TensorPoly(c)


def _split_left(w: np.ndarray, t: float) -> np.ndarray:
    """Coefficients of the restriction to [0, t] (axis 0)."""
    n = w.shape[0] - 1
    out = np.empty_like(w, dtype=float)
    out[0] = w[0]
    cur = w
    for r in range(1, n + 1):
        cur = (1.0 - t) * cur[:-1] + t * cur[1:]
        out[r] = cur[0]
    return out


def _split_right(w: np.ndarray, t: float) -> np.ndarray:
    """Coefficients of the restriction to [t, 1] (axis 0)."""
    n = w.shape[0] - 1
    out = np.empty_like(w, dtype=float)
    out[n] = w[n]
    cur = w
    for r in range(1, n + 1):
        cur = (1.0 - t) * cur[:-1] + t * cur[1:]
        out[n - r] = cur[-1]
    return out


def _restrict_axis(w: np.ndarray, a: float, b: float) -> np.ndarray:
    if not b > a:
        raise ValueError(f"degenerate axis restriction [{a}, {b}]")
    # Order the two splits so neither reparametrisation divides by ~0.
    if abs(1.0 - a) >= abs(b):
        w = _split_right(w, a)
        return _split_left(w, (b - a) / (1.0 - a))
    w = _split_left(w, b)
    return _split_right(w, a / b)


def restrict_box(p: TensorPoly, sub_lo, sub_hi) -> TensorPoly:
    """Reparametrise onto a sub-box: q(t) = p(sub_lo + t * (sub_hi - sub_lo)).

    The sub-box may slightly exceed [0,1]^d (used for overlap-expanded
    subcells)."""
    lo = np.atleast_1d(np.asarray(sub_lo, dtype=float))
    hi = np.atleast_1d(np.asarray(sub_hi, dtype=float))
    c = p.coeffs
    if lo.shape != (c.ndim,) or hi.shape != (c.ndim,):
        raise ValueError("sub-box bounds must match polynomial dims")
    for ax in range(c.ndim):
        w = np.moveaxis(c, ax, 0)
        w = _restrict_axis(w, lo[ax], hi[ax])
        c = np.moveaxis(w, 0, ax)
    return TensorPoly(c)


def _line_restrict_coeffs(c: np.ndarray, base: np.ndarray, k: int) -> np.ndarray:
    # Collapse axes in descending order so positions of lower axes stay fixed.
    w = c
    for ax in range(c.ndim - 1, -1, -1):
        if ax == k:
            continue
        t = base[ax - 1] if ax > k else base[ax]
        w = _decasteljau_axis(w, ax, float(t))
    return np.atleast_1d(w)


def line_restrict(p: TensorPoly, base, k: int) -> TensorPoly:
    """Univariate restriction to the line {base + y e_k : y in [0,1]}.

    ``base`` lists the d-1 fixed coordinates in ascending axis order."""
    base = np.atleast_1d(np.asarray(base, dtype=float))
    if base.shape != (p.dims - 1,):
        raise ValueError("base point must have d-1 components")
    return TensorPoly(_line_restrict_coeffs(p.coeffs, base, k))


def face_restrict(p: TensorPoly, k: int, side: int) -> TensorPoly:
    """Restriction to the face x_k = side (side is 0 or 1).

    By endpoint interpolation this is the coefficient slice at index 0 or
    n_k along axis k."""
    if p.dims < 2:
        raise ValueError("face restriction requires dims >= 2")
    if side not in (0, 1):
        raise ValueError("side must be 0 or 1")
    idx = side * (p.coeffs.shape[k] - 1)
    return TensorPoly(np.take(p.coeffs, idx, axis=k))


# ---------------------------------------------------------------------------
# Interpolation (nodal values -> Bernstein coefficients)
# ---------------------------------------------------------------------------

def chebyshev_nodes(degree: int) -> np.ndarray:
    """Endpoint-inclusive Chebyshev nodes on [0,1] for the given degree.

    Returns degree+1 points ordered from 1 down to 0; a single midpoint node
    is used for degree 0."""
    if degree == 0:
        return np.array([0.5])
    i = np.arange(degree + 1)
    return 0.5 + 0.5 * np.cos(i * np.pi / degree)


def bernstein_basis_matrix(n: int, x) -> np.ndarray:
    """Matrix B[i, j] = b_j^n(x_i)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    j = np.arange(n + 1)
    binom = np.array([math.comb(n, jj) for jj in j], dtype=float)
    return binom * np.power.outer(x, j) * np.power.outer(1.0 - x, n - j)


@lru_cache(maxsize=None)
def _vandermonde_pinv(n: int) -> np.ndarray:
    V = bernstein_basis_matrix(n, chebyshev_nodes(n))
    U, s, Vt = np.linalg.svd(V)
    # The system grows ill-conditioned like 2^n; small singular values are
    # truncated to a pseudoinverse.
    cut = 100.0 * np.finfo(float).eps * s[0]
    inv_s = np.where(s > cut, 1.0 / np.where(s > cut, s, 1.0), 0.0)
    P = (Vt.T * inv_s) @ U.T
    P.setflags(write=False)
    return P


def interpolate(values, degrees: Sequence[int] | None = None) -> TensorPoly:
    """Recover the Bernstein polynomial interpolating nodal values.

    ``values`` holds samples on the tensor grid of endpoint-inclusive
    Chebyshev nodes (``chebyshev_nodes`` per axis, degree+1 points each).
    One Vandermonde system is solved per axis via a cached truncated SVD.
    """
    v = np.asarray(values, dtype=float)
    if degrees is None:
        degrees = tuple(s - 1 for s in v.shape)
    degrees = tuple(int(d) for d in degrees)
    if v.shape != tuple(d + 1 for d in degrees):
        raise ValueError(f"values shape {v.shape} does not match degrees {degrees}")
    for ax, n in enumerate(degrees):
        P = _vandermonde_pinv(n)
        v = np.moveaxis(np.tensordot(P, np.moveaxis(v, ax, 0), axes=(1, 0)), 0, ax)
    return TensorPoly(v)


# ---------------------------------------------------------------------------
# Monomial-basis input
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _monomial_to_bernstein(n: int) -> np.ndarray:
    T = np.zeros((n + 1, n + 1))
    for jj in range(n + 1):
        for i in range(jj + 1):
            T[jj, i] = math.comb(jj, i) / math.comb(n, i)
    T.setflags(write=False)
    return T


def from_monomial(coeffs) -> TensorPoly:
    """Exact conversion of a monomial coefficient tensor to Bernstein form.

    ``coeffs[i_1,...,i_d]`` multiplies ``x_1^{i_1} ... x_d^{i_d}`` on the
    reference box."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    for ax in range(c.ndim):
        T = _monomial_to_bernstein(c.shape[ax] - 1)
        c = np.moveaxis(np.tensordot(T, np.moveaxis(c, ax, 0), axes=(1, 0)), 0, ax)
    return TensorPoly(c)


def monomial_rebase(coeffs, lo, hi) -> np.ndarray:
    """Substitute x_l = lo_l + (hi_l - lo_l) t_l into a monomial tensor.

    Returns the monomial tensor in the t variables, so that polynomials given
    in physical coordinates can be re-expressed on the reference box."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    for ax in range(c.ndim):
        n = c.shape[ax] - 1
        a, w = lo[ax], hi[ax] - lo[ax]
        R = np.zeros((n + 1, n + 1))
        for jj in range(n + 1):
            for i in range(jj, n + 1):
                R[jj, i] = math.comb(i, jj) * a ** (i - jj) * w**jj
        c = np.moveaxis(np.tensordot(R, np.moveaxis(c, ax, 0), axes=(1, 0)), 0, ax)
    return c


def poly_on_box(coeffs, box: BoxMap) -> TensorPoly:
    """Bernstein polynomial on (0,1)^d representing a monomial-basis
    polynomial given in the physical coordinates of ``box``."""
    return from_monomial(monomial_rebase(coeffs, box.lo, box.hi))
