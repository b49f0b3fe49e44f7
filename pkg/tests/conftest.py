import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from topoinfer.graph import laplacian_from_adjacency, spectral_decomposition
from topoinfer.synth import GraphModelSpec, gen_graph

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def clustered_instance(seed, n_clusters=3, size=10, p_intra=0.7, p_inter=0.01):
    """Connected clustered graph, its Laplacian and spectral decomposition."""
    for s in range(seed, seed + 1000):
        g = gen_graph(GraphModelSpec("clustered", n_clusters=n_clusters, nodes_per_cluster=size,
                                     p_intra=p_intra, p_inter=p_inter, seed=s))
        if g.n_components() == 1:
            lap = np.asarray(laplacian_from_adjacency(g))
            return g, lap, spectral_decomposition(lap)
    raise RuntimeError("no connected instance found")


def er_instance(seed, n, p=0.5):
    for s in range(seed, seed + 1000):
        g = gen_graph(GraphModelSpec("erdos_renyi", n_nodes=n, p=p, seed=s))
        if g.n_components() == 1:
            lap = np.asarray(laplacian_from_adjacency(g))
            return g, lap, spectral_decomposition(lap)
    raise RuntimeError("no connected instance found")


@pytest.fixture(scope="session")
def clustered10():
    """Ten nodes in two clusters of five."""
    return clustered_instance(3, n_clusters=2, size=5)


ACCEPTANCE_LINES = []


def report_criterion(number: int, passed: bool, detail: str) -> None:
    """Record and print one acceptance line; the assertion is left to the caller."""
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
