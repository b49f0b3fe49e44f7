import numpy as np
import pytest
from hypothesis import given, strategies as st

from topoinfer.graph import bandlimiting_projector, spectral_decomposition, laplacian_from_adjacency
from topoinfer.synth import (GraphModelSpec, SignalModelSpec, cluster_labels, compressible_tail,
                             gen_bandlimited, gen_compressible, gen_discrete_alphabet, gen_graph,
                             gen_inverse_laplacian, gen_signals, trial_seed)

from conftest import clustered_instance


class TestGraphModels:
    def test_er_complete_and_empty(self):
        full = gen_graph(GraphModelSpec("erdos_renyi", n_nodes=30, p=1.0))
        assert np.count_nonzero(full.adjacency) == 870
        empty = gen_graph(GraphModelSpec("erdos_renyi", n_nodes=30, p=0.0))
        assert np.count_nonzero(empty.adjacency) == 0

    def test_ba_edge_count(self):
        for seed in range(5):
            g = gen_graph(GraphModelSpec("barabasi_albert", n_nodes=30, m0=4, m=3, seed=seed))
            assert g.n_edges() == 6 + 26 * 3

    def test_er_edge_count_binomial(self):
        counts = [gen_graph(GraphModelSpec("erdos_renyi", n_nodes=30, p=0.3, seed=s)).n_edges()
                  for s in range(100)]
        sigma = np.sqrt(435 * 0.3 * 0.7)
        assert all(abs(c - 0.3 * 435) <= 4 * sigma for c in counts)

    def test_clustered_structure(self):
        spec = GraphModelSpec("clustered", p_intra=1.0, p_inter=0.0)
        a = np.asarray(gen_graph(spec).adjacency)
        lab = cluster_labels(spec)
        same = lab[:, None] == lab[None, :]
        assert np.all(a[same & ~np.eye(30, dtype=bool)] == 1)
        assert np.all(a[~same] == 0)

    def test_weighted_range(self):
        a = np.asarray(gen_graph(GraphModelSpec("erdos_renyi", n_nodes=20, p=1.0, weighted=True)).adjacency)
        off = a[~np.eye(20, dtype=bool)]
        assert off.min() >= 0.5 and off.max() <= 1.5

    @pytest.mark.parametrize("kw", [dict(model="nope"), dict(p_intra=1.5),
                                    dict(model="barabasi_albert", n_nodes=5, m0=5, m=3),
                                    dict(model="erdos_renyi"), dict(n_nodes=31)])
    def test_invalid_specs(self, kw):
        with pytest.raises(ValueError):
            GraphModelSpec(**kw)

    @given(st.integers(0, 2**63 - 1))
    def test_deterministic(self, seed):
        spec = GraphModelSpec("barabasi_albert", n_nodes=12, seed=seed)
        np.testing.assert_array_equal(gen_graph(spec).adjacency, gen_graph(spec).adjacency)


class TestSeeds:
    def test_trial_seed_order_free(self):
        a = [trial_seed(7, i) for i in range(5)]
        b = [trial_seed(7, i) for i in reversed(range(5))][::-1]
        assert a == b
        assert len(set(a)) == 5


@pytest.fixture(scope="module")
def decomp30():
    return clustered_instance(11)[2]


class TestSignals:
    def test_bandlimited_support(self, decomp30):
        y, s = gen_bandlimited(decomp30, 3, 15, seed=4)
        assert np.sum(np.linalg.norm(s, axis=1) >= 1e-12) == 3
        coeffs = decomp30.eigenvectors.T @ y
        assert np.abs(coeffs[3:]).max() <= 1e-12
        b = bandlimiting_projector(decomp30.eigenvectors, range(3))
        assert np.linalg.norm(b @ y - y) <= 1e-10

    def test_full_bandwidth(self, decomp30):
        y, s = gen_bandlimited(decomp30, 30, 4, seed=1)
        assert np.all(s != 0)
        np.testing.assert_allclose(y, decomp30.eigenvectors @ s)

    def test_bandwidth_too_large(self, decomp30):
        with pytest.raises(ValueError):
            gen_bandlimited(decomp30, 31, 4, seed=1)

    def test_compressible_tail(self):
        tail = compressible_tail(30, 5, 2.0)
        assert tail[0] == pytest.approx((5 / 6) ** 4)
        assert tail[10 - 6] == pytest.approx(0.0625)
        assert np.all(np.diff(tail) < 0)

    def test_compressible_rows(self, decomp30):
        y = gen_compressible(decomp30, 5, 2.0, 8, seed=0)
        s = decomp30.eigenvectors.T @ y
        np.testing.assert_allclose(s[5:], np.repeat(compressible_tail(30, 5, 2.0)[:, None], 8, axis=1), atol=1e-12)

    def test_inverse_laplacian_kernel(self, decomp30):
        y = gen_inverse_laplacian(decomp30, 50, seed=0)
        assert np.abs(decomp30.eigenvectors[:, 0] @ y).max() <= 1e-12
        np.testing.assert_allclose(y.sum(axis=0), 0, atol=1e-10)

    def test_inverse_laplacian_variance(self, decomp30):
        y = gen_inverse_laplacian(decomp30, 100_000, seed=3)
        s = decomp30.eigenvectors.T @ y
        lam = decomp30.eigenvalues
        np.testing.assert_allclose(s[1:].var(axis=1), 1.0 / lam[1:], rtol=0.05)

    def test_discrete_alphabet(self, decomp30):
        y, s = gen_discrete_alphabet(decomp30, 3, 2, 4000, seed=5)
        assert set(np.unique(s[:3])) == {1.0, 2.0}
        assert np.all(s[3:] == 0)
        ones = np.sum(s[:3] == 1)
        n = s[:3].size
        assert abs(ones - n / 2) <= 3 * np.sqrt(n / 4)
        with pytest.raises(ValueError):
            gen_discrete_alphabet(decomp30, 3, 1, 4, seed=5)

    def test_dispatch_deterministic(self, decomp30):
        spec = SignalModelSpec("bandlimited", bandwidth=3, n_signals=6, seed=9)
        y1, _ = gen_signals(decomp30, spec)
        y2, _ = gen_signals(decomp30, spec)
        np.testing.assert_array_equal(y1, y2)
        assert gen_signals(decomp30, SignalModelSpec("compressible", bandwidth=5))[1] is None

    def test_mean_and_variance_convention(self, decomp30):
        _, s = gen_bandlimited(decomp30, 3, 200_000, seed=2, mean=1.0, variance=0.5)
        assert s[:3].mean() == pytest.approx(1.0, abs=0.01)
        assert s[:3].var() == pytest.approx(0.5, rel=0.02)
