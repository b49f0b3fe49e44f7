import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topoinfer.graph import validate_laplacian
from topoinfer.identifiability import (MAX_NODES, assemble_system, bandwidth_condition, check_ordering,
                                       duplication_matrix, feasible_point, nonnegative_singleton,
                                       planted_solution, rank_analysis, regime_boundary, sparsity_bound,
                                       vech_strict)
from topoinfer.recovery import RecoveryProblem, solve
from topoinfer.synth import gen_bandlimited

from conftest import clustered_instance, er_instance

PRINTED_N3 = np.array([
    [-1, 1, 0, 1, -1, 0, 0, 0, 0],
    [-1, 0, 1, 0, 0, 0, 1, 0, -1],
    [0, 0, 0, 0, -1, 1, 0, 1, -1],
]).T


class TestDuplication:
    def test_printed_n3(self):
        np.testing.assert_array_equal(duplication_matrix(3), PRINTED_N3)

    def test_n2(self):
        np.testing.assert_array_equal(duplication_matrix(2), [[-1], [1], [1], [-1]])

    def test_size_limits(self):
        with pytest.raises(ValueError):
            duplication_matrix(1)
        with pytest.raises(ValueError):
            duplication_matrix(MAX_NODES + 1)

    def test_sparse_matches_dense(self):
        np.testing.assert_array_equal(duplication_matrix(6, as_sparse=True).toarray(), duplication_matrix(6))

    @settings(max_examples=100)
    @given(st.integers(2, 12), st.integers(0, 2**32 - 1))
    def test_round_trip(self, n, seed):
        z = -np.random.default_rng(seed).uniform(0, 1, n * (n - 1) // 2)
        lap = (duplication_matrix(n) @ z).reshape(n, n, order="F")
        assert validate_laplacian(lap).valid
        np.testing.assert_array_equal(vech_strict(lap), z)


class TestAssembly:
    def test_dimensions(self):
        _, lap, dec = clustered_instance(0)
        sys_ = assemble_system(dec.eigenvectors[:, :3], np.trace(lap))
        assert sys_.shape == (91, 437)

    @given(st.integers(0, 10_000), st.integers(3, 12), st.integers(1, 5))
    def test_consistency(self, seed, n, k):
        _, lap, dec = er_instance(seed, n, 0.5)
        k = min(k, n)
        sys_ = assemble_system(dec.eigenvectors[:, :k], np.trace(lap))
        m, cols = sys_.shape
        assert (m, cols) == (k * n + 1, n * (n - 1) // 2 + k - 1)
        x0 = planted_solution(sys_, lap)
        assert sys_.residual(x0) <= 1e-8
        assert np.all(x0 >= -1e-12) and check_ordering(sys_, x0)
        np.testing.assert_allclose(sys_.laplacian(x0), lap, atol=1e-12)

    def test_planted_clustered10(self, clustered10):
        _, lap, dec = clustered10
        sys_ = assemble_system(dec.eigenvectors[:, :3], np.trace(lap))
        assert np.linalg.norm(sys_.f_matrix @ planted_solution(sys_, lap) - sys_.b_vector) <= 1e-8

    def test_q_block_structure(self, clustered10):
        _, lap, dec = clustered10
        u = dec.eigenvectors[:, :3]
        sys_ = assemble_system(u)
        n_pairs = sys_.n_pairs
        q_minus = -sys_.f_matrix[:-1, n_pairs:]
        for col, k in enumerate((1, 2)):
            expect = np.zeros(30)
            expect[k * 10:(k + 1) * 10] = u[:, k]
            np.testing.assert_array_equal(q_minus[:, col], expect)
        q = np.column_stack([np.concatenate([u[:, 0], np.zeros(20)]), q_minus])
        assert np.linalg.matrix_rank(q) == 3

    def test_rejections(self, clustered10):
        _, _, dec = clustered10
        u = dec.eigenvectors
        with pytest.raises(ValueError):
            assemble_system(u[:, :3], support=(0, 2, 4))
        with pytest.raises(ValueError):
            assemble_system(u[:, 1:4])
        with pytest.raises(ValueError):
            assemble_system(2 * u[:, :3])
        assemble_system(u[:, :3], support=(0, 1, 2))


class TestRank:
    def test_regime_n30(self):
        _, lap, dec = clustered_instance(1)
        v = rank_analysis(assemble_system(dec.eigenvectors[:, :3], np.trace(lap)), n_components=3)
        assert regime_boundary(30) == pytest.approx(14.931, abs=1e-3)
        assert v.regime == "underdetermined" and not v.singleton
        assert v.rank >= 2 and v.sparsity_bound == 90
        assert v.rank + v.nullity == 437

    @settings(max_examples=25)
    @given(st.integers(0, 10_000), st.integers(3, 9), st.integers(1, 9))
    def test_rank_bounds_and_nullity(self, seed, n, k):
        _, lap, dec = er_instance(seed, n, 0.6)
        k = min(k, n)
        v = rank_analysis(assemble_system(dec.eigenvectors[:, :k], np.trace(lap)))
        lo, hi = v.rank_bounds
        assert k - 1 <= lo <= v.rank <= hi
        # kernel: symmetric operators on the complement plus free in-band eigenvalues
        assert v.nullity == (n - k) * (n - k + 1) // 2 + k - 2

    def test_full_basis_not_singleton(self):
        # K = N leaves N - 2 free eigenvalues, so the rank test cannot certify uniqueness
        _, lap, dec = er_instance(2, 6, 0.6)
        v = rank_analysis(assemble_system(dec.eigenvectors, np.trace(lap)))
        assert v.regime == "overdetermined"
        assert v.nullity == 4 and not v.singleton

    def test_two_nodes_singleton_recovered(self):
        lap = np.array([[1.0, -1.0], [-1.0, 1.0]])
        u = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
        sys_ = assemble_system(u, 2.0)
        v = rank_analysis(sys_, n_components=1)
        assert v.singleton and v.rank == 2
        y = np.array([[0.3, 1.0], [-0.3, 1.0]])
        res = solve(RecoveryProblem("tv_gl", u_k=u, y=y, mu=1.0, trace_target=2.0))
        assert np.abs(res.laplacian.matrix - lap).max() <= 1e-5
        assert np.count_nonzero(lap - np.diag(np.diag(lap))) <= v.sparsity_bound


class TestBounds:
    def test_examples(self):
        assert sparsity_bound(30, 3, 3) == 90
        assert sparsity_bound(10, 2, 1) == 18
        with pytest.raises(ValueError):
            sparsity_bound(10, 2, 0)

    def test_bandwidth_condition(self):
        assert bandwidth_condition(10, 2, 1, 18) == (True, 10.0)
        assert bandwidth_condition(10, 2, 1, 20) == (False, 11.0)
        assert bandwidth_condition(4, 3, 1, 6) == (True, 5.0)


class TestLP:
    def test_feasible_and_not_unique(self, clustered10):
        _, lap, dec = clustered10
        sys_ = assemble_system(dec.eigenvectors[:, :3], np.trace(lap))
        x = feasible_point(sys_)
        assert x is not None and sys_.residual(x) <= 1e-7
        single, _ = nonnegative_singleton(sys_, planted_solution(sys_, lap))
        assert single is False

    def test_complete_graph_always_feasible(self, clustered10):
        _, lap, dec = clustered10
        sys_ = assemble_system(dec.eigenvectors[:, :3], 10.0)
        n_pairs = sys_.n_pairs
        x = np.concatenate([np.full(n_pairs, 10.0 / 90), np.full(2, 10.0 / 9)])
        assert sys_.residual(x) <= 1e-12

    def test_two_nodes_lp(self):
        u = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
        single, x = nonnegative_singleton(assemble_system(u, 2.0))
        assert single is True
        np.testing.assert_allclose(x, [1.0, 2.0], atol=1e-9)

