import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meramsc import mera
from meramsc import tensor as tc


def _einsum_reconstruct(net):
    """Contract all four factors in one explicit index expression."""
    return np.einsum("pqjk,ijr,rs,klms->ipqlm", net.u1, net.w1, net.b, net.w2)


def _random_semi_orthogonal(rng, p, q):
    m, r = np.linalg.qr(rng.standard_normal((p, q)))
    return m * np.sign(np.diag(r))


def _assert_orthogonal(net, tol=1e-10):
    assert max(net.orthogonality_errors()) <= tol


legs = st.tuples(*[st.integers(1, 3)] * 5)


class TestInitNetwork:
    def test_small_network_is_valid(self):
        net = mera.init_network((2, 2, 2, 2, 2), 2, seed=0)
        _assert_orthogonal(net)
        assert net.u1.shape == (2, 2, 2, 2)
        assert net.w1.shape == (2, 2, 2) and net.w2.shape == (2, 2, 2, 2)

    def test_deterministic(self):
        a = mera.init_network((3, 2, 2, 3, 2), 3, seed=5)
        b = mera.init_network((3, 2, 2, 3, 2), 3, seed=5)
        for f in ("u1", "w1", "w2", "b"):
            np.testing.assert_array_equal(getattr(a, f), getattr(b, f))

    def test_full_rank_w1_is_square_orthogonal(self):
        net = mera.init_network((2, 2, 2, 2, 2), 4, seed=1)
        W1 = net.W1
        assert W1.shape == (4, 4)
        np.testing.assert_allclose(W1 @ W1.T, np.eye(4), atol=1e-12)

    @pytest.mark.parametrize("rank,bound", [(5, "I0\\*I1"), (9, "I0\\*I1")])
    def test_rank_too_large(self, rank, bound):
        with pytest.raises(ValueError, match=bound):
            mera.init_network((2, 2, 2, 2, 2), rank)

    def test_rank_exceeds_second_group(self):
        with pytest.raises(ValueError, match="I2\\*I3\\*I4"):
            mera.init_network((4, 4, 1, 1, 2), 3)


class TestReconstruct:
    def test_matches_einsum(self, rng):
        net = mera.init_network((2, 3, 2, 2, 3), 3, seed=2)
        np.testing.assert_allclose(mera.reconstruct(net), _einsum_reconstruct(net), atol=1e-13)

    def test_canonical_factors_by_hand(self):
        legs_ = (2, 2, 2, 2, 2)
        r = 2
        net = mera.from_matrices(legs_, np.eye(4), np.eye(4)[:, :r], np.eye(8)[:, :r], np.eye(r))
        y = mera.reconstruct(net)
        expected = np.zeros(legs_)
        expected[0, 0, 0, 0, 0] = 1.0  # row 0 of W1 pairs with column 0 of W2
        expected[1, 0, 1, 0, 0] = 1.0  # index 1 is (1, 0) on legs 0-1 and (1, 0, 0) on legs 2-4
        np.testing.assert_array_equal(y, expected)

    def test_scaling(self):
        net = mera.init_network((2, 2, 3, 2, 2), 2, seed=3)
        scaled = mera.from_matrices(net.leg_dims, net.U, net.W1, net.W2, 2.5 * net.b)
        np.testing.assert_allclose(mera.reconstruct(scaled), 2.5 * mera.reconstruct(net), atol=1e-13)

    @settings(max_examples=30, deadline=None)
    @given(legs, st.integers(0, 1000))
    def test_norm_equals_core_norm(self, leg_dims, seed):
        rank = min(leg_dims[0] * leg_dims[1], leg_dims[2] * leg_dims[3] * leg_dims[4])
        rank = max(1, rank // 2)
        net = mera.init_network(leg_dims, rank, seed)
        assert np.linalg.norm(mera.reconstruct(net)) == pytest.approx(np.linalg.norm(net.b), rel=1e-10)


class TestBlockUpdates:
    legs_ = (2, 3, 2, 2, 2)

    def test_fixed_points(self):
        net = mera.init_network(self.legs_, 3, seed=4)
        y = mera.reconstruct(net)
        for updated in (
            mera.update_disentangler(y, net),
            mera.update_isometry(y, net, 1),
            mera.update_isometry(y, net, 2),
        ):
            assert mera.fit_error(y, updated) <= 1e-12
        np.testing.assert_allclose(mera.update_top_core(y, net).b, net.b, atol=1e-12)

    def test_zero_data_gives_zero_core(self):
        net = mera.init_network(self.legs_, 3, seed=4)
        assert not np.any(mera.update_top_core(np.zeros(self.legs_), net).b)

    def test_disentangler_beats_random(self, rng):
        net = mera.init_network(self.legs_, 2, seed=6)
        y = rng.standard_normal(self.legs_)
        new = mera.update_disentangler(y, net)
        m_u = (net.W1 @ net.b @ net.W2.T).reshape(self.legs_, order="F")
        g = tc.unfold(y, 1, 2) @ tc.unfold(m_u, 1, 2).T
        best = np.trace(new.U.T @ g)
        n = g.shape[0]
        for _ in range(500):
            assert np.trace(_random_semi_orthogonal(rng, n, n).T @ g) <= best + 1e-12
        _assert_orthogonal(new)

    @pytest.mark.parametrize("which", [1, 2])
    def test_isometry_beats_random(self, rng, which):
        net = mera.init_network(self.legs_, 2, seed=7)
        y = rng.standard_normal(self.legs_)
        new = mera.update_isometry(y, net, which)
        best = mera.fit_error(y, new)
        W = new.W1 if which == 1 else new.W2
        for _ in range(500):
            cand = _random_semi_orthogonal(rng, *W.shape)
            if which == 1:
                other = mera.from_matrices(net.leg_dims, net.U, cand, net.W2, net.b)
            else:
                other = mera.from_matrices(net.leg_dims, net.U, net.W1, cand, net.b)
            assert mera.fit_error(y, other) >= best - 1e-12
        _assert_orthogonal(new)

    def test_isometry_bad_which(self):
        net = mera.init_network(self.legs_, 2)
        with pytest.raises(ValueError):
            mera.update_isometry(np.zeros(self.legs_), net, 3)

    def test_top_core_rank_one_least_squares(self, rng):
        net = mera.init_network(self.legs_, 1, seed=8)
        y = rng.standard_normal(self.legs_)
        unit = mera.reconstruct(mera.from_matrices(net.leg_dims, net.U, net.W1, net.W2, np.ones((1, 1))))
        a = unit.reshape(-1, 1)
        coef, *_ = np.linalg.lstsq(a, y.ravel(), rcond=None)
        assert mera.update_top_core(y, net).b[0, 0] == pytest.approx(coef[0], rel=1e-10)

    def test_shape_mismatch(self):
        net = mera.init_network(self.legs_, 2)
        bad = np.zeros((2, 2, 2, 2, 2))
        for fn in (mera.update_disentangler, mera.update_top_core):
            with pytest.raises(ValueError):
                fn(bad, net)
        with pytest.raises(ValueError):
            mera.update_isometry(bad, net, 1)


class TestApproximate:
    def test_warm_start_exact(self):
        net = mera.init_network((3, 2, 3, 2, 2), 3, seed=9)
        y = mera.reconstruct(net)
        cfg = mera.MeraConfig(rank=3, init="warm", warm_start=net)
        _, rec, trace = mera.approximate(y, cfg)
        assert np.linalg.norm(rec - y) <= 1e-10 * np.linalg.norm(y)
        assert len(trace.errors) == cfg.sweeps

    def test_full_split_rank_exact(self):
        net = mera.init_network((2, 2, 2, 2, 2), 4, seed=10)
        y = mera.reconstruct(net)
        _, rec, _ = mera.approximate(y, mera.MeraConfig(rank=4, init="warm", warm_start=net))
        np.testing.assert_allclose(rec, y, atol=1e-12)

    def test_svd_init_full_rank_exact(self, rng):
        y = rng.standard_normal((2, 3, 2, 2, 3))
        start = mera.svd_init(y, 6)
        _assert_orthogonal(start)
        _, rec, _ = mera.approximate(y, mera.MeraConfig(rank=6, sweeps=1, init="warm", warm_start=start))
        assert np.linalg.norm(rec - y) <= 1e-12 * np.linalg.norm(y)

    def test_trace_matches_recomputed_error(self, rng):
        y = rng.standard_normal((2, 3, 3, 2, 2))
        net, rec, trace = mera.approximate(y, mera.MeraConfig(rank=2, sweeps=6, seed=1))
        assert trace.errors[-1] == pytest.approx(np.linalg.norm(y - rec), rel=1e-10)
        assert trace.errors[-1] == pytest.approx(mera.fit_error(y, net), rel=1e-10)
        assert np.all(np.diff(trace.errors) <= 1e-12)
        _assert_orthogonal(net)

    def test_each_block_nonincreasing(self, rng):
        y = rng.standard_normal((2, 2, 3, 2, 2))
        net = mera.init_network(y.shape, 2, seed=3)
        errs = [mera.fit_error(y, net)]
        for _ in range(5):
            net = mera.update_disentangler(y, net)
            errs.append(mera.fit_error(y, net))
            net = mera.update_isometry(y, net, 1)
            errs.append(mera.fit_error(y, net))
            net = mera.update_isometry(y, net, 2)
            errs.append(mera.fit_error(y, net))
            net = mera.update_top_core(y, net)
            errs.append(mera.fit_error(y, net))
            _assert_orthogonal(net)
        assert np.all(np.diff(errs) <= 1e-12)

    def test_deterministic(self, rng):
        y = rng.standard_normal((2, 2, 2, 2, 3))
        cfg = mera.MeraConfig(rank=2, sweeps=3, seed=11)
        a, b = mera.approximate(y, cfg), mera.approximate(y, cfg)
        np.testing.assert_array_equal(a[1], b[1])
        assert a[2].errors == b[2].errors

    def test_rejects_wrong_order(self):
        with pytest.raises(ValueError):
            mera.approximate(np.zeros((2, 2, 2, 2)), mera.MeraConfig(rank=1))

    def test_rejects_infeasible_rank(self):
        with pytest.raises(ValueError, match="exceeds"):
            mera.approximate(np.zeros((2, 2, 2, 2, 2)), mera.MeraConfig(rank=5))

    def test_warm_start_shape_mismatch(self):
        net = mera.init_network((2, 2, 2, 2, 2), 2)
        with pytest.raises(ValueError):
            mera.approximate(np.zeros((2, 2, 2, 2, 3)), mera.MeraConfig(rank=2, init="warm", warm_start=net))

    @pytest.mark.parametrize("kwargs", [{"rank": 0}, {"rank": 2, "sweeps": 0}, {"rank": 2, "init": "warm"}])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            mera.MeraConfig(**kwargs)
