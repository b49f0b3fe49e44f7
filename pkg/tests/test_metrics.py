import numpy as np
import pytest
from hypothesis import given, strategies as st

from topoinfer.graph import Graph, laplacian_from_adjacency
from topoinfer.metrics import (CSV_COLUMNS, binarization_threshold, binarize_adjacency, correlation_rho,
                               edge_set, evaluate, precision_recall_f, read_csv, recovery_errors,
                               reports_to_csv, summarize)
from topoinfer.synth import GraphModelSpec, gen_graph


def _lap(seed, n=8):
    g = gen_graph(GraphModelSpec("erdos_renyi", n_nodes=n, p=0.5, seed=seed))
    return np.asarray(laplacian_from_adjacency(g).matrix)


class TestRho:
    def test_identity_and_sign(self):
        lap = _lap(1)
        assert correlation_rho(lap, lap) == pytest.approx(1.0)
        assert correlation_rho(lap, 2 * lap) == pytest.approx(1.0)
        assert correlation_rho(lap, -lap) == pytest.approx(-1.0)

    def test_constant_rejected(self):
        with pytest.raises(ValueError):
            correlation_rho(np.eye(3), np.zeros((3, 3)))
        with pytest.raises(ValueError):
            correlation_rho(np.eye(3), np.eye(4))

    @given(st.integers(0, 1000), st.floats(1e-3, 1e3))
    def test_scale_invariant(self, seed, alpha):
        lap = _lap(seed)
        if not np.any(lap):
            return
        assert correlation_rho(lap, alpha * lap) == pytest.approx(1.0, abs=1e-12)


class TestBinarize:
    def test_all_ones(self):
        a = np.ones((5, 5)) - np.eye(5)
        assert binarization_threshold(a) == 0.5
        assert binarize_adjacency(a).n_edges() == 10

    def test_zero(self):
        assert binarize_adjacency(np.zeros((4, 4))).n_edges() == 0

    def test_two_level_example(self):
        n = 10
        a = np.full((n, n), 0.1)
        pairs = [(i, i + 1) for i in range(0, 10, 2)] + [(0, 2), (0, 3), (4, 6), (5, 7), (8, 1)]
        for i, j in pairs:
            a[i, j] = a[j, i] = 0.9
        np.fill_diagonal(a, 0.0)
        # 20 ordered entries at 0.9 and 70 at 0.1 over 90 off-diagonal entries
        assert binarization_threshold(a) == pytest.approx(0.1389, abs=5e-5)
        assert binarize_adjacency(a).n_edges() == 10

    def test_all_entries_flag(self):
        a = np.ones((4, 4)) - np.eye(4)
        assert binarization_threshold(a, offdiag=False) == pytest.approx(0.375)


class TestErrors:
    def test_exact(self):
        a = np.asarray(gen_graph(GraphModelSpec("erdos_renyi", n_nodes=6, p=0.5, seed=2)).adjacency)
        assert recovery_errors(a, a)[0] == 0.0

    def test_complement(self):
        a = np.ones((4, 4)) - np.eye(4)
        e0, _ = recovery_errors(a, np.zeros((4, 4)))
        assert e0 == 1.0

    def test_single_edge(self):
        a = np.zeros((3, 3))
        a[0, 1] = a[1, 0] = 1.0
        e0, ef = recovery_errors(a, np.zeros((3, 3)))
        assert e0 == pytest.approx(1 / 3)
        assert ef == pytest.approx(np.sqrt(2) / 6)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            recovery_errors(np.zeros((3, 3)), np.zeros((4, 4)))


class TestPRF:
    def test_examples(self):
        g = {(0, 1), (1, 2)}
        assert precision_recall_f(g, g) == (1.0, 1.0, 1.0)
        p, r, f = precision_recall_f(g, g | {(2, 3), (0, 3)})
        assert (p, r) == (0.5, 1.0) and f == pytest.approx(2 / 3)
        assert precision_recall_f(g, {(3, 4)}) == (0.0, 0.0, 0.0)
        assert precision_recall_f(g, set()) == (0.0, 0.0, 0.0)

    def test_orientation_ignored(self):
        assert precision_recall_f({(0, 1)}, {(1, 0)}) == (1.0, 1.0, 1.0)

    def test_empty_ground_truth(self):
        with pytest.raises(ValueError):
            precision_recall_f(set(), {(0, 1)})


class TestEvaluate:
    @given(st.integers(0, 500), st.integers(0, 500))
    def test_ranges_and_f(self, s1, s2):
        lt, le = _lap(s1), _lap(s2 + 1000)
        if not np.any(lt) or not np.any(le):
            return
        rep = evaluate(lt, le)
        assert -1 <= rep.rho <= 1 and 0 <= rep.e0 <= 1 and rep.ef >= 0
        for v in (rep.precision, rep.recall, rep.f_measure):
            assert 0 <= v <= 1
        d = rep.precision + rep.recall
        assert rep.f_measure == pytest.approx(2 * rep.precision * rep.recall / d if d > 0 else 0.0)

    @given(st.integers(0, 500), st.permutations(range(8)))
    def test_relabel_invariant(self, seed, perm):
        lt = _lap(seed)
        rng = np.random.default_rng(seed)
        noise = rng.uniform(0, 1, (8, 8))
        a_est = np.maximum(-lt, 0) + np.triu(noise, 1) + np.triu(noise, 1).T
        le = np.diag(a_est.sum(1)) - a_est
        if not np.any(lt):
            return
        p = np.eye(8)[list(perm)]
        r1 = evaluate(lt, le)
        r2 = evaluate(p @ lt @ p.T, p @ le @ p.T)
        for name in ("rho", "e0", "ef", "precision", "recall", "f_measure", "threshold_used"):
            assert getattr(r1, name) == pytest.approx(getattr(r2, name), abs=1e-12)

    def test_row_columns(self):
        lap = _lap(3)
        row = evaluate(lap, lap, method="tv_gl", N=8).row(mu=1.0, unknown=3)
        assert tuple(row) == CSV_COLUMNS
        assert row["method"] == "tv_gl" and row["runtime_ms"] == ""


class TestCsv:
    def test_round_trip(self):
        rows = [{"seed": 1, "method": "dong", "rho": 0.5}, {"seed": 2, "rho": None}]
        text = reports_to_csv(rows)
        back = read_csv(text)
        assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
        assert back[0]["rho"] == "0.5" and back[1]["rho"] == ""

    def test_summarize(self):
        assert summarize([1.0]) == (1.0, None)
        m, se = summarize([1.0, 3.0])
        assert m == 2.0 and se == pytest.approx(1.0)


def test_edge_set():
    assert edge_set(Graph.from_edges(4, [(2, 1), (0, 3)])) == {(1, 2), (0, 3)}
