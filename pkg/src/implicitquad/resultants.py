"""Resultants and pseudo-discriminants of tensor-product Bernstein polynomials.

The resultant of f and g along an elimination axis k is the multivariate
polynomial whose value at a base point equals the univariate resultant of the
two line restrictions above that point.  It vanishes wherever the restrictions
share a (real or complex) root, so its zero set contains all base points of
interface crossings; the pseudo-discriminant, the unnormalised resultant of f
with its own k-derivative, plays the same role for branching points and
degenerate vertical interfaces.

Univariate resultants are determinants of Sylvester or Bezout matrices
assembled directly from Bernstein coefficients; the multivariate polynomial is
recovered by interpolating determinant values on a Chebyshev tensor grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
import scipy.linalg

from .bernstein import (
    TensorPoly,
    _line_restrict_coeffs,
    chebyshev_nodes,
    differentiate,
    interpolate,
    reduce_degree,
)
from .errors import DegenerateGeometryError

__all__ = [
    "ResultantMatrix",
    "sylvester_matrix",
    "bezout_matrix",
    "determinant",
    "resultant",
    "pseudo_discriminant",
]


@dataclass(frozen=True)
class ResultantMatrix:
    kind: str  # "sylvester" | "bezout"
    entries: np.ndarray

    def __post_init__(self):
        e = np.ascontiguousarray(np.asarray(self.entries, dtype=float))
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("resultant matrix must be square")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)


def sylvester_matrix(f_coeffs, g_coeffs) -> ResultantMatrix:
    """Sylvester matrix of two univariate Bernstein polynomials.

    For degrees n and m the matrix is (n+m) x (n+m): the first m rows hold
    shifted copies of f_i * C(n,i), the next n rows shifted copies of
    g_i * C(m,i), and the whole matrix is scaled on the right by
    diag(C(n+m-1, j))^-1, which tames entry growth for larger degrees.
    """
    f = np.ravel(np.asarray(f_coeffs, dtype=float))
    g = np.ravel(np.asarray(g_coeffs, dtype=float))
    n, m = f.size - 1, g.size - 1
    if n == 0 and m == 0:
        raise ValueError("at least one polynomial must have degree >= 1")
    fb = f * np.array([math.comb(n, i) for i in range(n + 1)], dtype=float)
    gb = g * np.array([math.comb(m, i) for i in range(m + 1)], dtype=float)
    size = n + m
    S = np.zeros((size, size))
    for r in range(m):
        S[r, r : r + n + 1] = fb
    for r in range(n):
        S[m + r, r : r + m + 1] = gb
    D = np.array([math.comb(size - 1, j) for j in range(size)], dtype=float)
    return ResultantMatrix("sylvester", S / D)


def bezout_matrix(f_coeffs, g_coeffs) -> ResultantMatrix:
    """Symmetric Bezout matrix of two equal-degree Bernstein polynomials.

    Only the lower-left triangle is built by the recurrence and mirrored;
    running the recurrence into the upper triangle is numerically unstable.
    """
    f = np.ravel(np.asarray(f_coeffs, dtype=float))
    g = np.ravel(np.asarray(g_coeffs, dtype=float))
    if f.size != g.size:
        raise ValueError("Bezout matrix requires equal degrees")
    n = f.size - 1
    if n < 1:
        raise ValueError("degree must be >= 1")
    B = np.zeros((n, n))
    # 1-based recurrences; matrix indices are shifted by one.
    for i in range(1, n + 1):
        B[i - 1, 0] = (n / i) * (f[i] * g[0] - f[0] * g[i])
    for j in range(1, n):
        B[n - 1, j] = (n / (n - j)) * (f[n] * g[j] - f[j] * g[n])
        for i in range(n - 1, j, -1):
            B[i - 1, j] = (n * n / (i * (n - j))) * (
                f[i] * g[j] - f[j] * g[i]
            ) + (j * (n - i) / (i * (n - j))) * B[i, j - 1]
    low = np.tril(B)
    return ResultantMatrix("bezout", low + np.tril(B, -1).T)


def _perm_sign(perm: np.ndarray) -> int:
    n = len(perm)
    seen = np.zeros(n, dtype=bool)
    sign = 1
    for i in range(n):
        if seen[i]:
            continue
        j = i
        length = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def determinant(matrix: ResultantMatrix | np.ndarray) -> float:
    """Determinant via QR with column pivoting (rank-revealing, robust for
    the near-singular matrices produced close to interface junctions)."""
    a = matrix.entries if isinstance(matrix, ResultantMatrix) else np.asarray(matrix)
    if a.shape == (1, 1):
        return float(a[0, 0])
    (_, tau), R, jpvt = scipy.linalg.qr(a, mode="raw", pivoting=True)
    reflections = int(np.count_nonzero(tau))
    return float(np.prod(np.diag(R)) * (-1.0) ** reflections * _perm_sign(jpvt))


def _univariate_resultant(f1: np.ndarray, g1: np.ndarray) -> float:
    if f1.size == g1.size and f1.size >= 2:
        return determinant(bezout_matrix(f1, g1))
    return determinant(sylvester_matrix(f1, g1))


def resultant(f: TensorPoly, g: TensorPoly, k: int) -> TensorPoly:
    """Resultant of f and g along axis k as a (d-1)-variate polynomial.

    The output degree along a retained axis l is n_l*m_k + m_l*n_k.  The
    Bezout form is used when the degrees along k match, Sylvester otherwise.
    Raises DegenerateGeometryError when the resultant is identically zero
    (the polynomials share a factor), which is ill-posed for quadrature.
    """
    if f.dims != g.dims:
        raise ValueError("polynomials must share dims")
    d = f.dims
    if d < 2:
        raise ValueError("resultant requires dims >= 2")
    nf, ng = f.degrees, g.degrees
    nk, mk = nf[k], ng[k]
    if nk == 0 and mk == 0:
        raise ValueError("both polynomials are constant along the elimination axis")
    rdeg = tuple(
        nf[ax] * mk + ng[ax] * nk for ax in range(d) if ax != k
    )
    axes_nodes = [chebyshev_nodes(r) for r in rdeg]
    values = np.empty(tuple(r + 1 for r in rdeg))
    base = np.empty(d - 1)
    for idx in product(*(range(r + 1) for r in rdeg)):
        for ax, i in enumerate(idx):
            base[ax] = axes_nodes[ax][i]
        f1 = _line_restrict_coeffs(f.coeffs, base, k)
        g1 = _line_restrict_coeffs(g.coeffs, base, k)
        values[idx] = _univariate_resultant(f1, g1)
    out = interpolate(values, rdeg)
    scale = max(np.abs(f.coeffs).max(), 1e-300) ** mk
    scale *= max(np.abs(g.coeffs).max(), 1e-300) ** nk
    if np.abs(out.coeffs).max() <= 1e-12 * scale:
        raise DegenerateGeometryError(
            "identically zero resultant: the polynomials share a component "
            "along the elimination axis"
        )
    # The degree bound is rarely tight; dropping content-free representation
    # degrees keeps chained eliminations well-posed (an inflated Bernstein
    # degree would make every later resultant vanish through shared roots at
    # infinity) and keeps base polynomials cheap to work with.  Only the zero
    # set matters downstream, so normalise away the large dynamic range that
    # determinant values accumulate.
    out = reduce_degree(out)
    return TensorPoly(out.coeffs / np.abs(out.coeffs).max())


def pseudo_discriminant(f: TensorPoly, k: int) -> TensorPoly:
    """Unnormalised resultant of f and its k-derivative along axis k.

    Unlike the conventional discriminant, the missing normalisation keeps
    degenerate vertical interfaces visible: its zero set contains every base
    point above which the height function branches or contains a vertical
    segment.  Output degree along a retained axis l is (2*n_k - 1)*n_l.
    """
    if f.degrees[k] < 1:
        raise ValueError("pseudo-discriminant requires degree >= 1 along the axis")
    return resultant(f, differentiate(f, k), k)
