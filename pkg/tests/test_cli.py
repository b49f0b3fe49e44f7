import json

import numpy as np
import pytest

from topoinfer.cli import main
from topoinfer.io import read_dense, read_edge_list, read_json, write_dense
from topoinfer.metrics import correlation_rho

GEN = ["gen", "--model", "clustered", "--clusters", "3", "--size", "10", "--signals", "bandlimited",
       "--K", "3", "--M", "15", "--seed", "7"]


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    assert main(GEN + ["--out", str(out)]) == 0
    return out


class TestGen:
    def test_files_and_determinism(self, generated, tmp_path):
        names = ("graph.edges", "laplacian.txt", "U.txt", "lambda.txt", "Y.txt", "S.txt")
        assert all((generated / n).exists() for n in names)
        assert main(GEN + ["--out", str(tmp_path)]) == 0
        for n in names:
            assert (generated / n).read_bytes() == (tmp_path / n).read_bytes()
        g = read_edge_list(generated / "graph.edges")
        lap = read_dense(generated / "laplacian.txt")
        np.testing.assert_array_equal(np.diag(lap), np.asarray(g.adjacency).sum(axis=1))

    def test_bandwidth_too_large(self, tmp_path, capsys):
        assert main(["gen", "--K", "31", "--out", str(tmp_path)]) == 2
        assert capsys.readouterr().err

    def test_er_alias(self, tmp_path):
        assert main(["gen", "--model", "er", "--n", "12", "--p", "0.3", "--out", str(tmp_path)]) == 0


class TestPipeline:
    def test_learn_recover_eval(self, generated, tmp_path, capsys):
        tdir = tmp_path / "t"
        assert main(["learn", "--y", str(generated / "Y.txt"), "--K", "3", "--out", str(tdir)]) == 0
        rec = read_json(tdir / "learn.json")
        assert rec["relative_objective"] <= 1e-6
        assert read_dense(tdir / "U_K.txt").shape == (30, 3)

        rdir = tmp_path / "r"
        assert main(["recover", "--method", "tv_gl", "--u", str(generated / "U.txt"), "--y",
                     str(generated / "Y.txt"), "--mu", "2", "--out", str(rdir)]) == 0
        assert main(["eval", "--true", str(generated / "laplacian.txt"), "--est", str(rdir / "L_hat.txt")]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        header, row = lines[-2].split(","), lines[-1].split(",")
        assert float(dict(zip(header, row))["rho"]) >= 0.9

        edir = tmp_path / "e"
        assert main(["recover", "--method", "esa_gl", "--transform", str(tdir), "--mu", "0.1",
                     "--out", str(edir)]) == 0
        assert read_json(edir / "recover.json")["status"] == "converged"
        assert np.isfinite(correlation_rho(read_dense(generated / "laplacian.txt"), read_dense(edir / "L_hat.txt")))

    def test_esa_needs_coefficients(self, generated, tmp_path):
        assert main(["recover", "--method", "esa_gl", "--u", str(generated / "U.txt"), "--out", str(tmp_path)]) == 2

    def test_dong_warns_on_basis(self, generated, tmp_path, capsys):
        assert main(["recover", "--method", "dong", "--u", str(generated / "U.txt"), "--y",
                     str(generated / "Y.txt"), "--out", str(tmp_path)]) == 0
        assert "warning" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["learn", "--y", str(tmp_path / "nope.txt"), "--K", "2", "--out", str(tmp_path)]) == 3


class TestIdentify:
    def test_record(self, generated, tmp_path, capsys):
        u = read_dense(generated / "U.txt")[:, :3]
        write_dense(tmp_path / "uk.txt", u)
        assert main(["identify", "--u", str(tmp_path / "uk.txt"), "--components", "3"]) == 0
        rec = json.loads(capsys.readouterr().out)
        assert rec["regime"] == "underdetermined" and rec["shape"] == [91, 437]
        assert rec["sparsity_bound"] == 90 and rec["singleton"] is False

    def test_non_orthonormal(self, tmp_path):
        write_dense(tmp_path / "bad.txt", np.ones((4, 2)))
        assert main(["identify", "--u", str(tmp_path / "bad.txt")]) == 2


class TestExperiment:
    def test_run_and_override(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[experiment]\nschema_version = 1\ntrials = 3\n[graph]\nn_clusters = 2\n"
                       "nodes_per_cluster = 5\np_intra = 0.8\np_inter = 0.1\n[methods]\nnames = dong\nmu_grid = 1\n")
        out = tmp_path / "o"
        assert main(["experiment", str(cfg), "--trials", "1", "--jobs", "2", "--out", str(out)]) == 0
        assert len((out / "trials.csv").read_text().splitlines()) == 2

    def test_bad_config(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[experiment]\nkind = table\n")
        assert main(["experiment", str(cfg), "--out", str(tmp_path)]) == 2

    def test_missing_config(self, tmp_path):
        assert main(["experiment", str(tmp_path / "none.ini")]) == 3


def test_usage_error():
    assert main(["nonsense"]) == 2
