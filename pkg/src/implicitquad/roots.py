"""Real roots of univariate Bernstein polynomials on the open interval (0,1).

The fast path isolates roots by recursive bisection using Descartes-style
coefficient sign counts (uniform sign: no root; one sign change: exactly one
simple root) and polishes each isolated root with bisection-safeguarded
Newton.  Whenever the fast path cannot certify an interval (too many sign
changes after the maximum subdivision depth, a near-zero coefficient, or a
Newton stall) the whole polynomial falls back to a generalised-eigenvalue
companion pencil, which is backward stable and insensitive to roots at
infinity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .bernstein import TensorPoly, _split_left, _split_right

__all__ = ["RootList", "roots", "eigen_roots"]

_COEFF_TOL = 1e-12  # relative near-zero coefficient guard
_IMAG_TOL = 1e-10
_ENDPOINT_TOL = 1e-12
_CLUSTER_TOL = 1e-8


@dataclass(frozen=True)
class RootList:
    """Ascending real roots in (0,1) plus the method that produced them."""

    roots: tuple[float, ...]
    method_used: str  # "fast" | "eigen"

    def __post_init__(self):
        r = tuple(float(v) for v in self.roots)
        if any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("roots must be strictly increasing")
        if any(not 0.0 < v < 1.0 for v in r):
            raise ValueError("roots must lie in the open interval (0,1)")
        object.__setattr__(self, "roots", r)

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)


def _as_coeffs(f) -> np.ndarray:
    if isinstance(f, TensorPoly):
        if f.dims != 1:
            raise ValueError("root finding requires a univariate polynomial")
        return np.asarray(f.coeffs, dtype=float)
    c = np.ravel(np.asarray(f, dtype=float))
    if c.size == 0:
        raise ValueError("empty coefficient vector")
    return c


def _eval_1d(c: np.ndarray, t: float) -> float:
    w = c
    for _ in range(c.size - 1):
        w = (1.0 - t) * w[:-1] + t * w[1:]
    return float(w[0])


class _FastPathFailure(Exception):
    pass


def _sign_changes(c: np.ndarray) -> int:
    s = np.sign(c)
    return int(np.count_nonzero(s[:-1] != s[1:]))


def _newton(c, dc, a, b, fa, fb, scale, max_iter):
    """One simple root in [a,b]; Newton with a bisection safeguard."""
    lo, hi = a, b
    flo = fa
    x = 0.5 * (a + b)
    for _ in range(max_iter):
        fx = _eval_1d(c, x)
        if abs(fx) <= 1e-14 * scale:
            return x
        if (fx > 0) == (flo > 0):
            lo = x
            flo = fx
        else:
            hi = x
        dfx = _eval_1d(dc, x)
        if dfx != 0.0:
            step = fx / dfx
            x_new = x - step
        else:
            x_new = np.nan
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
            step = x_new - x
        if abs(x_new - x) <= 1e-15:
            return x_new
        x = x_new
    raise _FastPathFailure("newton iteration cap reached")


def _quadratic_roots(c: np.ndarray) -> list[float]:
    # Monomial form of c0*b0^2 + c1*b1^2 + c2*b2^2.
    a = c[0] - 2.0 * c[1] + c[2]
    b = 2.0 * (c[1] - c[0])
    c0 = c[0]
    if a == 0.0:
        return [] if b == 0.0 else [-c0 / b]
    disc = b * b - 4.0 * a * c0
    if disc < 0.0:
        return []
    if disc == 0.0:
        return [-b / (2.0 * a)]
    sq = np.sqrt(disc)
    q = -0.5 * (b + np.copysign(sq, b))
    r1 = q / a
    r2 = c0 / q if q != 0.0 else -b / a - r1
    return [r1, r2]


def roots(f, *, newton_cap: int = 12, max_depth: int = 4) -> RootList:
    """All real roots of f in (0,1), accurate to ~1e-13 for simple roots.

    Degrees one and two use closed forms.  Higher degrees take the
    subdivision fast path with at most ``max_depth`` bisection levels and
    ``newton_cap`` Newton iterations per root, falling back to
    ``eigen_roots`` on the full polynomial whenever certification fails.
    Identically zero input is rejected.
    """
    c = _as_coeffs(f)
    scale = np.abs(c).max()
    if scale == 0.0:
        raise ValueError("cannot compute roots of the identically zero polynomial")
    c = c / scale  # roots are scale-invariant; keep tolerances honest
    scale = 1.0
    n = c.size - 1
    if n == 0:
        return RootList((), "fast")
    if n == 1:
        out = []
        if (c[0] > 0) != (c[1] > 0) or c[0] == 0.0 or c[1] == 0.0:
            denom = c[0] - c[1]
            if denom != 0.0:
                y = c[0] / denom
                if 0.0 < y < 1.0:
                    out.append(y)
        return RootList(tuple(out), "fast")
    if n == 2:
        out = sorted(y for y in _quadratic_roots(c) if 0.0 < y < 1.0)
        return RootList(tuple(_cluster(out)), "fast")

    dc = n * (c[1:] - c[:-1])
    found: list[float] = []

    def visit(cl: np.ndarray, a: float, b: float, depth: int) -> None:
        if np.abs(cl).min() <= _COEFF_TOL * scale:
            raise _FastPathFailure("near-zero coefficient")
        changes = _sign_changes(cl)
        if changes == 0:
            return
        if changes == 1:
            found.append(_newton(c, dc, a, b, cl[0], cl[-1], scale, newton_cap))
            return
        if depth >= max_depth:
            raise _FastPathFailure("maximum subdivision depth reached")
        mid = 0.5 * (a + b)
        visit(_split_left(cl, 0.5), a, mid, depth + 1)
        visit(_split_right(cl, 0.5), mid, b, depth + 1)

    try:
        visit(c, 0.0, 1.0, 0)
    except _FastPathFailure:
        return eigen_roots(c)
    out = sorted(y for y in found if 0.0 < y < 1.0)
    return RootList(tuple(out), "fast")


def _cluster(values: list[float]) -> list[float]:
    """Merge values within the clustering tolerance, reporting cluster means."""
    if not values:
        return []
    out = []
    group = [values[0]]
    for v in values[1:]:
        if v - group[-1] <= _CLUSTER_TOL:
            group.append(v)
        else:
            out.append(sum(group) / len(group))
            group = [v]
    out.append(sum(group) / len(group))
    return out


def companion_pencil(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Generalised-eigenvalue pencil (A, B) whose eigenvalues are the roots
    of the degree-n Bernstein polynomial with coefficients c."""
    n = c.size - 1
    A = np.zeros((n, n))
    B = np.zeros((n, n))
    for i in range(n - 1):
        A[i, i + 1] = 1.0
        B[i, i] = (n - i) / (i + 1.0)
        B[i, i + 1] = 1.0
    A[n - 1, :] = -c[:-1]
    B[n - 1, :] = -c[:-1]
    B[n - 1, n - 1] = -c[n - 1] + c[n] / n
    return A, B


def eigen_roots(f) -> RootList:
    """Roots in (0,1) via the generalised eigenproblem A x = lambda B x.

    All (real and complex) roots are computed by the QZ algorithm; eigenvalues
    with negligible imaginary part are polished with one Newton step, filtered
    to the open interval and clustered so multiple roots are reported once."""
    c = _as_coeffs(f)
    scale = np.abs(c).max()
    if scale == 0.0:
        raise ValueError("cannot compute roots of the identically zero polynomial")
    # The pencil mixes unit structural entries with coefficient rows, so a
    # badly scaled polynomial must be normalised for QZ to stay accurate.
    c = c / scale
    n = c.size - 1
    if n == 0:
        return RootList((), "eigen")
    if n == 1:
        rl = roots(c)
        return RootList(rl.roots, "eigen")
    A, B = companion_pencil(c)
    vals = scipy.linalg.eigvals(A, B)
    vals = vals[np.isfinite(vals)]
    real = vals[np.abs(vals.imag) <= _IMAG_TOL * (1.0 + np.abs(vals.real))].real
    dc = n * (c[1:] - c[:-1])
    polished = []
    for x in np.sort(real):
        fx = _eval_1d(c, x)
        dfx = _eval_1d(dc, x)
        if dfx != 0.0:
            step = fx / dfx
            if abs(step) < 1e-3:
                x = x - step
        if _ENDPOINT_TOL < x < 1.0 - _ENDPOINT_TOL:
            polished.append(float(x))
    return RootList(tuple(_cluster(sorted(polished))), "eigen")
