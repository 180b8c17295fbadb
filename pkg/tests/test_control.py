import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aoisched.control import (LoopModel, build_penalty_table, initial_error_state, initial_full_state,
                              step_error, step_full_state)
from aoisched.errors import InitializationError, ModelValidationError, PenaltyOverflowError

from conftest import scalar_loop


def brute_penalty(A, Sigma, delta):
    # independent: explicit matrix powers, no incremental accumulation
    A = np.atleast_2d(A)
    Sigma = np.atleast_2d(Sigma)
    return sum(np.trace(np.linalg.matrix_power(A.T, r) @ np.linalg.matrix_power(A, r) @ Sigma)
               for r in range(delta))


class TestLoopModel:
    def test_scalars_promoted(self):
        lp = scalar_loop(1.5)
        assert lp.A.shape == (1, 1) and lp.n == 1 and lp.m == 1

    @pytest.mark.parametrize("kw", [
        dict(A=[[1, 0], [0, 1]], B=[[1], [1], [1]], Sigma=np.eye(2), L=[[1, 1]], p=0.5),
        dict(A=[[1, 0], [0, 1]], B=[[1], [0]], Sigma=np.eye(2), L=[[1, 1, 1]], p=0.5),
        dict(A=[[1, 0], [0, 1]], B=[[1], [0]], Sigma=np.eye(3), L=[[1, 1]], p=0.5),
        dict(A=[[1, 2, 3]], B=1, Sigma=1, L=1, p=0.5),
    ])
    def test_dimension_mismatch(self, kw):
        with pytest.raises(ModelValidationError):
            LoopModel(**kw)

    @pytest.mark.parametrize("p", [0.0, -0.1, 1.01])
    def test_bad_probability(self, p):
        with pytest.raises(ModelValidationError):
            scalar_loop(1.1, p=p)

    def test_sigma_must_be_psd(self):
        with pytest.raises(ModelValidationError):
            LoopModel(A=np.eye(2), B=np.eye(2), Sigma=[[1, 2], [2, 1]], L=np.eye(2), p=1)
        with pytest.raises(ModelValidationError):
            LoopModel(A=np.eye(2), B=np.eye(2), Sigma=[[1, 0.5], [0, 1]], L=np.eye(2), p=1)

    def test_non_diagonal_sigma_warns(self):
        with pytest.warns(UserWarning):
            LoopModel(A=np.eye(2), B=np.eye(2), Sigma=[[1, 0.5], [0.5, 1]], L=np.eye(2), p=1)

    def test_noise_factor(self):
        S = np.array([[2.0, 0.3], [0.3, 1.0]])
        with pytest.warns(UserWarning):
            lp = LoopModel(A=np.eye(2), B=np.eye(2), Sigma=S, L=np.eye(2), p=1)
        F = lp.noise_factor()
        np.testing.assert_allclose(F @ F.T, S, atol=1e-14)


class TestPenaltyTable:
    def test_identity_dynamics(self):
        assert build_penalty_table(scalar_loop(1.0), 3).values.tolist() == [1.0, 2.0, 3.0]

    def test_a_1_1(self):
        oracle = [sum(1.1 ** (2 * r) for r in range(d)) for d in (1, 2, 3)]
        np.testing.assert_allclose(oracle, [1, 2.21, 3.6741], rtol=1e-14)
        np.testing.assert_allclose(build_penalty_table(scalar_loop(1.1), 3).values, oracle, rtol=1e-14)

    def test_a_1_9(self):
        np.testing.assert_allclose(build_penalty_table(scalar_loop(1.9), 2).values, [1, 4.61], rtol=1e-14)

    def test_one_based_indexing(self):
        g = build_penalty_table(scalar_loop(1.1, sigma=2.0), 4)
        assert g[1] == 2.0
        with pytest.raises(IndexError):
            g[0]
        with pytest.raises(IndexError):
            g[5]

    def test_matrix_against_powers(self, rng):
        A = rng.normal(size=(3, 3))
        X = rng.normal(size=(3, 3))
        Sigma = X @ X.T
        with pytest.warns(UserWarning):
            lp = LoopModel(A=A, B=np.eye(3), Sigma=Sigma, L=np.eye(3), p=0.7)
        g = build_penalty_table(lp, 8)
        for d in range(1, 9):
            assert g[d] == pytest.approx(brute_penalty(A, Sigma, d), rel=1e-10)

    def test_overflow_names_loop_and_age(self):
        with pytest.raises(PenaltyOverflowError) as exc:
            build_penalty_table(scalar_loop(1e10, name="wild"), 100)
        assert exc.value.loop_name == "wild"
        assert 1 < exc.value.delta <= 100
        assert "wild" in str(exc.value)

    @given(a=st.floats(0.0, 3.0), sigma=st.floats(0.0, 10.0), M=st.integers(1, 30))
    def test_monotone_scalar(self, a, sigma, M):
        g = build_penalty_table(scalar_loop(a, sigma=sigma), M).values
        assert g[0] == sigma
        assert np.all(np.diff(g) >= 0)

    @settings(max_examples=40)
    @given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 4))
    def test_monotone_matrix(self, seed, n):
        r = np.random.default_rng(seed)
        A = r.normal(size=(n, n)) * 0.8
        D = np.diag(r.uniform(0.1, 2.0, size=n))
        lp = LoopModel(A=A, B=np.eye(n), Sigma=D, L=np.eye(n), p=0.5)
        g = build_penalty_table(lp, 12).values
        assert g[0] == pytest.approx(np.trace(D))
        assert np.all(np.diff(g) >= 0)

    @given(sigma=st.floats(0.01, 5.0), M=st.integers(1, 40))
    def test_identity_is_linear(self, sigma, M):
        lp = LoopModel(A=np.eye(2), B=np.eye(2), Sigma=np.diag([sigma, 2 * sigma]), L=np.eye(2), p=1)
        g = build_penalty_table(lp, M).values
        np.testing.assert_allclose(g, np.arange(1, M + 1) * 3 * sigma, rtol=1e-12)


class TestStepError:
    def test_zero_noise_keeps_zero(self):
        s = step_error(initial_error_state([0.0]), 1.5, [0.0], False)
        assert s.e.tolist() == [0.0] and s.delta == 2

    def test_reception_resets(self):
        s = step_error(initial_error_state([2.0]).__class__(e=np.array([2.0]), delta=4), 1.5, [0.3], True)
        assert s.e.tolist() == [0.3] and s.delta == 1

    def test_propagation(self):
        s = step_error(initial_error_state([1.0]), 1.3, [0.5], False)
        assert s.e[0] == pytest.approx(1.8, abs=1e-15)

    def test_matches_unrolled_sum(self, rng):
        A = rng.normal(size=(2, 2))
        w = rng.normal(size=(10, 2))
        s = initial_error_state(w[0])
        for k in range(1, 10):
            s = step_error(s, A, w[k], False)
        # e = sum_{q=1}^{delta} A^{q-1} w[t-q] with t = 10, delta = 10
        unrolled = sum(np.linalg.matrix_power(A, q - 1) @ w[10 - q] for q in range(1, 11))
        assert s.delta == 10
        np.testing.assert_allclose(s.e, unrolled, rtol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ModelValidationError):
            step_error(initial_error_state([1.0, 2.0]), np.eye(3), [0.0, 0.0], False)

    @pytest.mark.parametrize("delta", [1, 3])
    def test_mean_square_matches_penalty(self, delta):
        # pinned age: reset, then delta-1 losses, then read ||e||^2
        A = np.array([[1.2, 0.4], [0.0, 0.9]])
        Sigma = np.diag([1.0, 0.5])
        lp = LoopModel(A=A, B=np.eye(2), Sigma=Sigma, L=np.eye(2), p=1)
        g = build_penalty_table(lp, delta)[delta]
        r = np.random.default_rng(delta)
        n = 100_000
        w = r.normal(size=(n, delta, 2)) * np.sqrt(np.diag(Sigma))
        sq = np.empty(n)
        for k in range(n):
            s = initial_error_state(np.zeros(2))
            s = step_error(s, A, w[k, 0], True)
            for j in range(1, delta):
                s = step_error(s, A, w[k, j], False)
            assert s.delta == delta
            sq[k] = s.e @ s.e
        se = sq.std(ddof=1) / np.sqrt(n)
        assert abs(sq.mean() - g) < 3 * se


class TestFullState:
    def test_zero_fixed_point(self):
        lp = scalar_loop(1.5)
        s = initial_full_state(lp, [0.0])
        s = step_full_state(s, lp, [0.0], False)
        assert s.x.tolist() == [0.0] and s.xhat.tolist() == [0.0] and s.e.tolist() == [0.0]

    def test_deadbeat_cancels_known_state(self):
        lp = scalar_loop(1.1)
        s = initial_full_state(lp, [2.0])
        s = s.__class__(e=np.zeros(1), delta=1, x=np.array([2.0]), xhat=np.array([2.0]),
                        u=np.array([-2.2]), sample=np.array([2.0]), inputs=(np.zeros(1),))
        s = step_full_state(s, lp, [0.0], True)
        assert s.x[0] == 0.0

    def test_initial_estimate(self):
        lp = scalar_loop(1.7)
        s = initial_full_state(lp, [0.8])
        assert s.xhat.tolist() == [0.0] and s.e.tolist() == [0.8] and s.delta == 1

    def test_history_underflow(self):
        lp = scalar_loop(1.1)
        s = initial_full_state(lp, [1.0])
        s = s.__class__(e=s.e, delta=5, x=s.x, xhat=s.xhat, u=s.u, sample=s.sample, inputs=s.inputs)
        with pytest.raises(InitializationError):
            step_full_state(s, lp, [0.0], False)

    def test_requires_full_state(self):
        with pytest.raises(InitializationError):
            step_full_state(initial_error_state([0.0]), scalar_loop(1.1), [0.0], False)

    def test_equivalence_with_error_recursion(self, rng):
        A = np.array([[1.1, 0.3], [-0.2, 0.95]])
        B = np.array([[1.0], [0.5]])
        L = np.array([[0.6, 0.2]])
        lp = LoopModel(A=A, B=B, Sigma=np.diag([1.0, 0.3]), L=L, p=0.6)
        x0 = rng.normal(size=2)
        fs = initial_full_state(lp, x0)
        es = initial_error_state(fs.e)
        for _ in range(400):
            w = rng.normal(size=2)
            ok = bool(rng.random() < 0.6)
            fs = step_full_state(fs, lp, w, ok)
            es = step_error(es, A, w, ok)
            assert fs.delta == es.delta
            np.testing.assert_allclose(fs.e, es.e, rtol=1e-9, atol=1e-9 * (1 + np.abs(fs.x).max()))
            np.testing.assert_allclose(fs.e, fs.x - fs.xhat, rtol=0, atol=0)

    def test_k_losses_give_k_term_sum(self, rng):
        lp = scalar_loop(1.3)
        fs = initial_full_state(lp, [0.4])
        w = rng.normal(size=11)
        fs = step_full_state(fs, lp, [w[0]], True)
        for k in range(1, 11):
            fs = step_full_state(fs, lp, [w[k]], False)
        expected = sum(1.3 ** (q - 1) * w[11 - q] for q in range(1, 12))
        assert fs.delta == 11
        assert fs.e[0] == pytest.approx(expected, rel=1e-10)
