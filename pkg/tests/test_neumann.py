import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpt.bounds import zeta_fail_prob
from mpt.errors import BadInput, KTooLarge, SpectralDominance
from mpt.linalg import spectral_norm, sym_eigen
from mpt.neumann import (
    TruncationCapExceeded,
    default_order,
    interaction_cap,
    interaction_mc,
    neumann_reconstruct,
    neumann_series_apply,
)


def rand_sym(rng, n, norm=None):
    a = rng.standard_normal((n, n))
    a = (a + a.T) / 2
    if norm is not None:
        a *= norm / spectral_norm(a)
    return a


def low_rank(rng, n, values):
    q, _ = np.linalg.qr(rng.standard_normal((n, len(values))))
    m = (q * np.asarray(values, float)) @ q.T
    return (m + m.T) / 2


class TestSeriesApply:
    def test_zero_vector(self):
        h = rand_sym(np.random.default_rng(0), 5)
        res = neumann_series_apply(h, 10.0, np.zeros(5))
        assert np.all(res.partial == 0) and np.all(res.per_entry_abs == 0)

    def test_scaled_identity_closed_form(self):
        c, lam = 0.3, 1.2
        u = np.array([1.0, -2.0, 0.5])
        res = neumann_series_apply(c * np.eye(3), lam, u)
        r = c / lam
        np.testing.assert_allclose(res.partial, r / (1 - r) * u, atol=res.tail_bound + 1e-15)
        assert res.tail_bound <= 1e-10

    def test_doubling_order(self):
        rng = np.random.default_rng(1)
        h = rand_sym(rng, 10)
        lam = 4 * spectral_norm(h)
        u = rng.standard_normal(10)
        a = neumann_series_apply(h, lam, u, P_max=8)
        b = neumann_series_apply(h, lam, u, P_max=16)
        assert np.linalg.norm(b.partial - a.partial) <= a.tail_bound

    def test_tail_bound_formula(self):
        rng = np.random.default_rng(2)
        h = rand_sym(rng, 6, norm=1.0)
        u = rng.standard_normal(6)
        res = neumann_series_apply(h, -3.0, u, P_max=5)
        assert res.tail_bound == pytest.approx(np.linalg.norm(u) * (1 / 3) ** 6 / (1 - 1 / 3))

    def test_spectral_dominance(self):
        with pytest.raises(SpectralDominance):
            neumann_series_apply(np.eye(3), 1.0, np.ones(3))

    def test_cap(self):
        h = rand_sym(np.random.default_rng(3), 4, norm=0.999)
        with pytest.raises(TruncationCapExceeded):
            neumann_series_apply(h, 1.0, np.ones(4))

    def test_bad_order(self):
        with pytest.raises(BadInput):
            neumann_series_apply(np.zeros((2, 2)), 1.0, np.ones(2), P_max=0)

    def test_matrix_input_matches_columns(self):
        rng = np.random.default_rng(4)
        h = rand_sym(rng, 7, norm=1.0)
        u = rng.standard_normal((7, 3))
        res = neumann_series_apply(h, 5.0, u, P_max=12)
        for j in range(3):
            col = neumann_series_apply(h, 5.0, u[:, j], P_max=12)
            np.testing.assert_allclose(res.partial[:, j], col.partial, atol=1e-15)

    def test_default_order_meets_target(self):
        p = default_order(0.5, 2.0)
        assert 2.0 * 0.5 ** (p + 1) / 0.5 <= 1e-10 < 2.0 * 0.5 ** p / 0.5

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10**6), p=st.integers(1, 30))
    def test_per_entry_abs_monotone_and_dominating(self, seed, p):
        rng = np.random.default_rng(seed)
        h = rand_sym(rng, 6, norm=1.0)
        u = rng.standard_normal(6)
        a = neumann_series_apply(h, 2.0, u, P_max=p)
        b = neumann_series_apply(h, 2.0, u, P_max=p + 1)
        assert np.all(b.per_entry_abs >= a.per_entry_abs)
        assert np.all(a.per_entry_abs >= np.abs(a.partial) - 1e-15)


class TestReconstruct:
    def test_no_perturbation(self):
        rng = np.random.default_rng(5)
        m = low_rank(rng, 8, [3.0, -2.0])
        e = sym_eigen(m)
        vec, res = neumann_reconstruct(e, np.zeros((8, 8)), 1, e)
        assert res <= 1e-12

    def test_rank_one_single_term(self):
        rng = np.random.default_rng(6)
        m = low_rank(rng, 10, [4.0])
        h = rand_sym(rng, 10, norm=0.3)
        e, ep = sym_eigen(m), sym_eigen(m + h)
        vec, res = neumann_reconstruct(e, h, 1, ep)
        lt = ep.values[0]
        u1, v1 = e.vectors[:, 0], ep.vectors[:, 0]
        start = (e.values[0] / lt) * (v1 @ u1) * u1
        series = neumann_series_apply(h, lt, start)
        np.testing.assert_allclose(vec, start + series.partial, atol=1e-13)
        assert res <= 1e-8

    def test_rank_three_n50(self):
        rng = np.random.default_rng(7)
        m = low_rank(rng, 50, [12.0, 8.0, -6.0])
        h = rand_sym(rng, 50, norm=1.0)
        e, ep = sym_eigen(m), sym_eigen(m + h)
        for t in (1, 2, 50):
            assert spectral_norm(h) <= abs(ep.values[t - 1]) / 4
            _, res = neumann_reconstruct(e, h, t, ep)
            assert res <= 1e-8

    def test_residual_decays_at_norm_ratio(self):
        rng = np.random.default_rng(8)
        m = low_rank(rng, 30, [5.0, 3.0])
        h = rand_sym(rng, 30, norm=1.5)
        e, ep = sym_eigen(m), sym_eigen(m + h)
        rate = spectral_norm(h) / abs(ep.values[0])
        orders = np.arange(2, 40)
        res = np.array([neumann_reconstruct(e, h, 1, ep, P_max=int(p))[1] for p in orders])
        keep = res > 1e-12
        slope = np.polyfit(orders[keep], np.log(res[keep]), 1)[0]
        assert slope == pytest.approx(math.log(rate), rel=0.2)

    def test_spectral_dominance(self):
        e = sym_eigen(np.diag([1.0, 0.5]))
        with pytest.raises(SpectralDominance):
            neumann_reconstruct(e, 2 * np.eye(2), 2, sym_eigen(np.diag([3.0, 1.5])))


class TestInteraction:
    def test_cap_n1000(self):
        cap = interaction_cap(1000, 1.1)
        assert cap == pytest.approx(0.0625 * math.log(1000) ** 1.1)
        assert math.floor(cap) == 0
        with pytest.raises(KTooLarge):
            interaction_mc(1000, 1, 1.1, np.eye(1000)[0], 1, 0)

    def test_bounded_entries_never_exceed(self):
        freq, bound = interaction_mc(64, 1, 1.1, np.eye(64)[0], 200, 0, enforce_cap=False)
        assert freq == 0.0
        assert bound == pytest.approx(zeta_fail_prob(64, 1.1, 0.5, plus_one=False))

    def test_n256_k2(self):
        u = np.ones(256)
        freq, bound = interaction_mc(256, 2, 1.1, u, 10_000, 3, enforce_cap=False)
        assert freq <= bound

    def test_requires_unit_inf_norm(self):
        with pytest.raises(BadInput):
            interaction_mc(8, 1, 1.1, 0.5 * np.ones(8), 1, 0, enforce_cap=False)

    def test_deterministic(self):
        u = np.ones(16)
        a = interaction_mc(16, 3, 1.1, u, 50, 9, enforce_cap=False)
        assert a == interaction_mc(16, 3, 1.1, u, 50, 9, enforce_cap=False)
