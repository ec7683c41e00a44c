import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpt.errors import BadInput, DimMismatch, NoConvergence
from mpt.linalg import (
    EigenSystem,
    OrthonormalBasis,
    SymMatrix,
    align_basis,
    canonical_signs,
    principal_angles,
    quad_form,
    rank_k_reconstruct,
    read_matrix,
    span_h,
    spectral_norm,
    sym_eigen,
    sym_eigvals,
    write_matrix,
)


def random_sym(rng, n):
    a = rng.standard_normal((n, n))
    return (a + a.T) / 2


def count_below(m, sigma):
    """Eigenvalues of m below sigma, by the signs of the LDL^T pivots of m - sigma I."""
    a = [list(row) for row in np.asarray(m, float)]
    n = len(a)
    for i in range(n):
        a[i][i] -= sigma
    neg = 0
    for k in range(n):
        piv = a[k][k]
        if piv < 0:
            neg += 1
        for i in range(k + 1, n):
            f = a[i][k] / piv
            for j in range(k + 1, n):
                a[i][j] -= f * a[k][j]
    return neg


def bisection_eigenvalues(m, tol=1e-13):
    m = np.asarray(m, float)
    n = m.shape[0]
    r = float(np.abs(m).sum(axis=1).max()) + 1.0
    out = []
    for k in range(n):
        # k-th smallest eigenvalue: smallest sigma with count_below(sigma) > k
        lo, hi = -r, r
        while hi - lo > tol:
            mid = (lo + hi) / 2
            if count_below(m, mid) > k:
                hi = mid
            else:
                lo = mid
        out.append((lo + hi) / 2)
    return np.array(out[::-1])


class TestSymMatrix:
    def test_rejects_asymmetric(self):
        with pytest.raises(BadInput):
            SymMatrix([[1.0, 2.0], [0.0, 1.0]])

    def test_symmetrizes_within_tolerance(self):
        m = SymMatrix([[1.0, 2.0 + 1e-13], [2.0, 1.0]])
        assert m.data[0, 1] == m.data[1, 0]

    def test_rejects_non_finite_and_non_square(self):
        with pytest.raises(BadInput):
            SymMatrix([[np.nan]])
        with pytest.raises(DimMismatch):
            SymMatrix(np.zeros((2, 3)))

    def test_read_only(self):
        m = SymMatrix(np.eye(2))
        with pytest.raises(ValueError):
            m.data[0, 0] = 5.0

    def test_text_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        m = SymMatrix(random_sym(rng, 5))
        path = tmp_path / "m.txt"
        write_matrix(path, m)
        assert read_matrix(path) == m
        assert path.read_text().splitlines()[0] == "5"

    def test_read_rejects_bad_shape(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3\n1 2 3\n2 1 0\n")
        with pytest.raises(BadInput):
            read_matrix(path)


class TestSymEigen:
    def test_identity(self):
        e = sym_eigen(np.eye(3))
        np.testing.assert_array_equal(e.values, [1, 1, 1])
        np.testing.assert_array_equal(e.vectors, np.eye(3))

    def test_diagonal(self):
        e = sym_eigen(np.diag([3.0, 1.0, -2.0]))
        np.testing.assert_array_equal(e.values, [3, 1, -2])
        np.testing.assert_array_equal(e.vectors, np.eye(3))

    def test_random_6x6_against_bisection_oracle(self):
        m = random_sym(np.random.default_rng(6), 6)
        e = sym_eigen(m, method="jacobi")
        assert e.residual(m) <= 1e-10
        np.testing.assert_allclose(e.values, bisection_eigenvalues(m), atol=1e-8)

    def test_tol_range(self):
        with pytest.raises(BadInput):
            sym_eigen(np.eye(2), tol=0.0)
        with pytest.raises(BadInput):
            sym_eigen(np.eye(2), tol=1e-3)

    def test_iteration_cap(self, monkeypatch):
        import mpt.linalg as la

        monkeypatch.setattr(la, "MAX_SWEEPS", 0)
        with pytest.raises(NoConvergence):
            sym_eigen(random_sym(np.random.default_rng(0), 5), method="jacobi")

    def test_deterministic(self):
        m = random_sym(np.random.default_rng(7), 12)
        a, b = sym_eigen(m), sym_eigen(m)
        assert np.array_equal(a.values, b.values) and np.array_equal(a.vectors, b.vectors)

    def test_jacobi_and_lapack_agree(self):
        m = random_sym(np.random.default_rng(8), 20)
        a, b = sym_eigen(m, method="jacobi"), sym_eigen(m, method="lapack")
        np.testing.assert_allclose(a.values, b.values, atol=1e-10)
        np.testing.assert_allclose(a.vectors, b.vectors, atol=1e-8)

    def test_sign_convention_tie_goes_to_lowest_index(self):
        v = np.array([[0.5, -0.5], [-0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
        fixed = canonical_signs(v)
        assert fixed[0, 0] == 0.5 and fixed[0, 1] == 0.5

    def test_unknown_method(self):
        with pytest.raises(BadInput):
            sym_eigen(np.eye(2), method="qr")

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 30))
    def test_residual_orthonormality_trace(self, seed, n):
        m = random_sym(np.random.default_rng(seed), n)
        e = sym_eigen(m)
        assert e.residual(m) <= 1e-9
        assert np.max(np.abs(e.vectors.T @ e.vectors - np.eye(n))) <= 1e-9
        assert abs(e.values.sum() - np.trace(m)) <= 1e-9 * n
        assert np.all(np.diff(e.values) <= 0)
        np.testing.assert_allclose(np.asarray(rank_k_reconstruct(e, n)), m, atol=1e-9)
        assert spectral_norm(m) == max(abs(e.values[0]), abs(e.values[-1]))


class TestSpectralNorm:
    def test_zero(self):
        assert spectral_norm(np.zeros((3, 3))) == 0

    def test_diagonal(self):
        assert spectral_norm(np.diag([2.0, -5.0])) == 5

    def test_offdiagonal_closed_form(self):
        assert spectral_norm([[0, 0.3], [0.3, 0]]) == pytest.approx(0.3, abs=1e-15)

    def test_eigvals_match(self):
        m = random_sym(np.random.default_rng(1), 80)
        np.testing.assert_allclose(sym_eigvals(m), sym_eigen(m).values, atol=1e-10)


class TestRankK:
    def test_top_one(self):
        out = rank_k_reconstruct(sym_eigen(np.diag([5.0, 1.0, -3.0])), 1)
        np.testing.assert_allclose(np.asarray(out), np.diag([5.0, 0, 0]), atol=1e-15)

    def test_magnitude_ordering(self):
        out = rank_k_reconstruct(sym_eigen(np.diag([1.0, -4.0, 2.0])), 2)
        np.testing.assert_allclose(np.asarray(out), np.diag([0, -4.0, 2.0]), atol=1e-15)

    def test_magnitude_tie_prefers_smaller_index(self):
        out = rank_k_reconstruct(sym_eigen(np.diag([2.0, -2.0, 1.0])), 1)
        np.testing.assert_allclose(np.asarray(out), np.diag([2.0, 0, 0]), atol=1e-15)

    def test_bad_k(self):
        e = sym_eigen(np.eye(2))
        with pytest.raises(BadInput):
            rank_k_reconstruct(e, 3)


class TestPrincipalAngles:
    def test_same_subspace(self):
        q, _ = np.linalg.qr(np.random.default_rng(2).standard_normal((5, 2)))
        np.testing.assert_allclose(principal_angles(q, q).angles, 0, atol=1e-7)

    def test_orthogonal(self):
        assert principal_angles([1.0, 0.0], [0.0, 1.0]).angles[0] == pytest.approx(math.pi / 2)

    def test_one_dimensional(self):
        phi = 0.2
        ang = principal_angles([1.0, 0.0], [math.cos(phi), math.sin(phi)]).angles
        assert ang[0] == pytest.approx(phi, abs=1e-12)

    def test_ascending_and_matches_svd(self):
        rng = np.random.default_rng(3)
        x, _ = np.linalg.qr(rng.standard_normal((8, 3)))
        y, _ = np.linalg.qr(rng.standard_normal((8, 3)))
        ang = principal_angles(x, y).angles
        assert np.all(np.diff(ang) >= 0)
        sv = np.linalg.svd(x.T @ y, compute_uv=False)
        np.testing.assert_allclose(np.cos(ang), sv, atol=1e-10)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            principal_angles(np.eye(3)[:, :1], np.eye(3)[:, :2])


class TestAlignBasis:
    def test_permuted_columns(self):
        x = np.eye(4)[:, :3]
        y = x[:, [2, 0, 1]]
        np.testing.assert_allclose(align_basis(x, y).vectors, y, atol=1e-12)

    def test_sign_flip(self):
        y = np.array([0.6, 0.8])
        np.testing.assert_allclose(align_basis(-y, y).vectors[:, 0], y, atol=1e-12)

    def test_rotation_within_plane(self):
        x = np.eye(4)[:, :2]
        c, s = math.cos(0.1), math.sin(0.1)
        xr = x @ np.array([[c, -s], [s, c]])
        out = align_basis(xr, x).vectors
        np.testing.assert_allclose(out, x, atol=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            align_basis(np.eye(3)[:, :1], np.eye(4)[:, :1])

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 10), data=st.data())
    def test_alignment_inequalities(self, seed, n, data):
        d = data.draw(st.integers(1, n))
        rng = np.random.default_rng(seed)
        y, _ = np.linalg.qr(rng.standard_normal((n, d)))
        x, _ = np.linalg.qr(y + rng.uniform(0.0, 0.4) * rng.standard_normal((n, d)))
        ang = principal_angles(x, y)
        if ang.max > math.pi / 4:
            return
        delta2 = math.sin(ang.max) ** 2
        xh = align_basis(x, y).vectors
        g = xh.T @ y
        assert np.all(np.diag(g) >= 1 - delta2 - 1e-10)
        off = g - np.diag(np.diag(g))
        assert np.all(np.abs(off) <= delta2 + 1e-10)
        assert np.max(np.abs(xh @ xh.T - x @ x.T)) <= 1e-9


class TestQuadForm:
    def test_identity(self):
        x = np.array([0.6, 0.8])
        assert quad_form(x, np.eye(2), x) == pytest.approx(1.0)

    def test_zero(self):
        assert quad_form([1.0, 0.0], np.zeros((2, 2)), [0.0, 1.0]) == 0

    def test_swap(self):
        assert quad_form([1.0, 0.0], [[0, 1], [1, 0]], [0.0, 1.0]) == 1

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            quad_form([1.0], np.eye(2), [1.0, 0.0])


class TestSpanH:
    def test_sampled_unit_vectors_never_exceed(self):
        rng = np.random.default_rng(9)
        h = random_sym(rng, 8)
        basis, _ = np.linalg.qr(rng.standard_normal((8, 3)))
        top = span_h(h, basis)
        coef = rng.standard_normal((3, 1000))
        xs = basis @ (coef / np.linalg.norm(coef, axis=0))
        vals = np.abs(np.einsum("ik,ij,jk->k", xs, h, xs))
        assert vals.max() <= top + 1e-12

    def test_orthonormal_basis_validation(self):
        with pytest.raises(BadInput):
            OrthonormalBasis(np.ones((3, 2)))


def test_eigensystem_residual_helper():
    e = EigenSystem(np.array([1.0, 0.0]), np.eye(2))
    assert e.residual(np.diag([1.0, 0.0])) == 0
