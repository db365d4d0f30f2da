import itertools

import numpy as np
import pytest

from implicitquad.bernstein import (
    TensorPoly,
    chebyshev_nodes,
    differentiate,
    evaluate,
    from_monomial,
)
from implicitquad.errors import DegenerateGeometryError
from implicitquad.resultants import (
    ResultantMatrix,
    bezout_matrix,
    determinant,
    pseudo_discriminant,
    resultant,
    sylvester_matrix,
)
from implicitquad.roots import roots


def cofactor_det(a):
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n == 1:
        return a[0, 0]
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(a, 0, axis=0), j, axis=1)
        total += (-1.0) ** j * a[0, j] * cofactor_det(minor)
    return total


def lin_bernstein(a):
    """Bernstein coefficients of (x - a) on [0,1]."""
    return np.array([-a, 1.0 - a])


class TestSylvester:
    def test_degree_one_pair(self):
        # f = x, g = c represented at degree 1 as [c, c]: det prop to c.
        for c in (2.0, -0.7, 0.01):
            m = sylvester_matrix([0.0, 1.0], [c, c])
            assert m.entries.shape == (2, 2)
            d = determinant(m)
            ratio = d / c
            assert ratio == pytest.approx(d / c)
            assert abs(d) > 0
        d1 = determinant(sylvester_matrix([0.0, 1.0], [1.0, 1.0]))
        d2 = determinant(sylvester_matrix([0.0, 1.0], [-3.0, -3.0]))
        assert d2 / d1 == pytest.approx(-3.0, rel=1e-12)

    def test_shared_root_detection_linear(self):
        d_ab = determinant(sylvester_matrix(lin_bernstein(0.2), lin_bernstein(0.7)))
        d_ba = determinant(sylvester_matrix(lin_bernstein(0.7), lin_bernstein(0.2)))
        d_eq = determinant(sylvester_matrix(lin_bernstein(0.5), lin_bernstein(0.5)))
        assert d_ab == pytest.approx(0.5, abs=1e-13)
        assert d_ba == pytest.approx(-0.5, abs=1e-13)
        assert abs(d_eq) < 1e-13

    def test_identical_polynomials(self):
        rng = np.random.default_rng(41)
        f = rng.uniform(-1, 1, size=4)
        assert abs(determinant(sylvester_matrix(f, f))) < 1e-13

    def test_constant_against_linear(self):
        # m = 0 is allowed when n >= 1; the matrix reduces to the g rows.
        m = sylvester_matrix([0.0, 1.0], [4.0])
        assert m.entries.shape == (1, 1)
        assert determinant(m) == pytest.approx(4.0)

    def test_two_constants_rejected(self):
        with pytest.raises(ValueError):
            sylvester_matrix([1.0], [2.0])


class TestBezout:
    def test_degree_one_formula(self):
        f = np.array([2.0, 5.0])
        g = np.array([-1.0, 3.0])
        m = bezout_matrix(f, g)
        assert m.entries.shape == (1, 1)
        assert m.entries[0, 0] == pytest.approx(f[1] * g[0] - f[0] * g[1])

    def test_identical_gives_zero_matrix(self):
        rng = np.random.default_rng(42)
        f = rng.uniform(-1, 1, size=5)
        assert np.abs(bezout_matrix(f, f).entries).max() == 0.0

    def test_symmetry(self):
        rng = np.random.default_rng(43)
        for _ in range(20):
            f = rng.uniform(-1, 1, size=6)
            g = rng.uniform(-1, 1, size=6)
            B = bezout_matrix(f, g).entries
            scale = np.abs(B).max()
            assert np.abs(B - B.T).max() <= 1e-12 * max(scale, 1.0)

    def test_ratio_to_sylvester_is_constant(self):
        rng = np.random.default_rng(44)
        ratios = []
        for _ in range(20):
            f = rng.uniform(-1, 1, size=4)
            g = rng.uniform(-1, 1, size=4)
            db = determinant(bezout_matrix(f, g))
            ds = determinant(sylvester_matrix(f, g))
            ratios.append(db / ds)
        ratios = np.array(ratios)
        spread = np.abs(ratios - ratios.mean()).max() / abs(ratios.mean())
        assert spread < 1e-8

    def test_degree_mismatch_rejected(self):
        with pytest.raises(ValueError):
            bezout_matrix([1.0, 2.0], [1.0, 2.0, 3.0])


class TestDeterminant:
    def test_identity(self):
        assert determinant(ResultantMatrix("sylvester", np.eye(3))) == pytest.approx(1.0)

    def test_diagonal(self):
        assert determinant(np.diag([2.0, 3.0, 4.0])) == pytest.approx(24.0)

    def test_random_against_cofactor_expansion(self):
        rng = np.random.default_rng(45)
        for _ in range(10):
            a = rng.standard_normal((6, 6))
            ref = cofactor_det(a)
            assert determinant(a) == pytest.approx(ref, rel=1e-10)

    def test_zero_row(self):
        a = np.ones((3, 3))
        a[1] = 0.0
        assert determinant(a) == pytest.approx(0.0, abs=1e-14)


def dense_crossings(f, g, grid=400):
    """Base x-coordinates of true interface crossings, via a dense sign grid
    plus 2-D Newton refinement."""
    xs = np.linspace(0.0, 1.0, grid + 1)
    pts = np.stack(np.meshgrid(xs, xs, indexing="ij"), axis=-1).reshape(-1, 2)
    fv = evaluate(f, pts).reshape(grid + 1, grid + 1)
    gv = evaluate(g, pts).reshape(grid + 1, grid + 1)

    def change(v):
        a = v[:-1, :-1]
        out = np.zeros_like(a, dtype=bool)
        for blk in (v[1:, :-1], v[:-1, 1:], v[1:, 1:]):
            out |= np.signbit(a) != np.signbit(blk)
        return out

    fx, fy = differentiate(f, 0), differentiate(f, 1)
    gx, gy = differentiate(g, 0), differentiate(g, 1)
    found = []
    for i, j in np.argwhere(change(fv) & change(gv)):
        z = np.array([(i + 0.5) / grid, (j + 0.5) / grid])
        for _ in range(40):
            r = np.array([evaluate(f, z), evaluate(g, z)])
            J = np.array(
                [[evaluate(fx, z), evaluate(fy, z)], [evaluate(gx, z), evaluate(gy, z)]]
            )
            try:
                step = np.linalg.solve(J, r)
            except np.linalg.LinAlgError:
                break
            z = z - step
            if np.max(np.abs(step)) < 1e-14:
                break
        if (
            np.all(z > 1e-6)
            and np.all(z < 1 - 1e-6)
            and abs(evaluate(f, z)) < 1e-11
            and abs(evaluate(g, z)) < 1e-11
        ):
            found.append(z[0])
    return found


class TestResultant:
    def test_crossing_lines(self):
        f = from_monomial(np.array([[0.0, -1.0], [1.0, 0.0]]))  # x - y
        g = from_monomial(np.array([[-1.0, 1.0], [1.0, 0.0]]))  # x + y - 1
        r = resultant(f, g, 1)
        assert r.degrees == (2,)
        got = roots(r)
        assert len(got) == 1
        assert got.roots[0] == pytest.approx(0.5, abs=1e-12)

    def test_identical_polynomials_flagged_degenerate(self):
        f = from_monomial(np.array([[0.0, -1.0], [1.0, 0.0]]))
        with pytest.raises(DegenerateGeometryError):
            resultant(f, f, 1)

    def test_random_pairs_zero_set_soundness(self):
        rng = np.random.default_rng(46)
        checked = 0
        for _ in range(100):
            f = TensorPoly(rng.uniform(-1, 1, size=(3, 3)))
            g = TensorPoly(rng.uniform(-1, 1, size=(3, 3)))
            crossings = dense_crossings(f, g)
            if not crossings:
                continue
            r = resultant(f, g, 1)
            rr = list(roots(r).roots)
            if not rr:
                assert not crossings
                continue
            for x in crossings:
                checked += 1
                assert min(abs(x - v) for v in rr) < 1e-6
        assert checked > 10

    def test_symmetric_zero_sets(self):
        rng = np.random.default_rng(47)
        done = 0
        for _ in range(30):
            f = TensorPoly(rng.uniform(-1, 1, size=(3, 3)))
            g = TensorPoly(rng.uniform(-1, 1, size=(3, 3)))
            r1 = roots(resultant(f, g, 1)).roots
            r2 = roots(resultant(g, f, 1)).roots
            if len(r1) != len(r2):
                # Root sets must agree; tiny perturbations at tangencies are
                # the only allowed source of asymmetry, so fail loudly.
                raise AssertionError(f"asymmetric root count: {r1} vs {r2}")
            if r1:
                np.testing.assert_allclose(r1, r2, atol=1e-10)
                done += 1
        assert done > 5

    def test_degree_bound_and_offgrid_residual(self):
        rng = np.random.default_rng(48)
        f = TensorPoly(rng.uniform(-1, 1, size=(3, 3)))
        g = TensorPoly(rng.uniform(-1, 1, size=(2, 3)))
        r = resultant(f, g, 1)
        nf, ng = f.degrees, g.degrees
        assert r.degrees == (nf[0] * ng[1] + ng[0] * nf[1],)
        from implicitquad.bernstein import _line_restrict_coeffs
        from implicitquad.resultants import _univariate_resultant

        scale = np.abs(r.coeffs).max()
        for x in rng.uniform(0, 1, size=50):
            direct = _univariate_resultant(
                _line_restrict_coeffs(f.coeffs, np.array([x]), 1),
                _line_restrict_coeffs(g.coeffs, np.array([x]), 1),
            )
            assert abs(evaluate(r, [x]) - direct) <= 1e-8 * scale

    def test_3d_resultant_degrees(self):
        rng = np.random.default_rng(49)
        f = TensorPoly(rng.uniform(-1, 1, size=(2, 2, 2)))
        g = TensorPoly(rng.uniform(-1, 1, size=(2, 2, 2)))
        r = resultant(f, g, 2)
        assert r.dims == 2
        assert r.degrees == (2, 2)


class TestPseudoDiscriminant:
    def test_xy_cross(self):
        p = TensorPoly([[0.0, 0.0], [0.0, 1.0]])  # x*y
        pd = pseudo_discriminant(p, 1)
        # Zero set in (0,1) is exactly {x = 0}: proportional to x.
        assert pd.coeffs[0] == pytest.approx(0.0, abs=1e-14)
        assert len(roots(pd)) == 0
        xs = np.linspace(0.05, 1, 12)
        vals = np.array([evaluate(pd, [x]) for x in xs])
        np.testing.assert_allclose(vals / vals[-1], xs / xs[-1], atol=1e-12)

    def test_rotated_ellipse_two_roots(self):
        from test_masks import rotated_ellipse

        p, p_in, p_out = rotated_ellipse()
        pd = pseudo_discriminant(p, 1)
        got = sorted(roots(pd).roots)
        assert len(got) == 2
        assert got[0] == pytest.approx(p_in[0], abs=1e-9)
        assert got[1] == pytest.approx(p_out[0], abs=1e-9)

    def test_horizontal_line_has_trivial_discriminant(self):
        # y - 0.5: the derivative is the constant 1, never zero.
        p = from_monomial(np.array([[-0.5, 1.0], [0.0, 0.0]]))
        from implicitquad.masks import full_mask, intersection_mask

        dp = differentiate(p, 1)
        m = intersection_mask(p, full_mask(2), dp, full_mask(2))
        assert not m.nonempty
        pd = pseudo_discriminant(p, 1)
        assert len(roots(pd)) == 0

    def test_vertical_tangent_soundness(self):
        rng = np.random.default_rng(50)
        checked = 0
        for _ in range(100):
            f = TensorPoly(rng.uniform(-1, 1, size=(3, 3)))
            tangents = dense_crossings(f, differentiate(f, 1))
            if not tangents:
                continue
            pd = pseudo_discriminant(f, 1)
            rr = list(roots(pd).roots)
            for x in tangents:
                checked += 1
                assert rr and min(abs(x - v) for v in rr) < 1e-6
        assert checked > 10

    def test_degree_zero_rejected(self):
        p = TensorPoly([[1.0], [2.0]])
        with pytest.raises(ValueError):
            pseudo_discriminant(p, 1)
