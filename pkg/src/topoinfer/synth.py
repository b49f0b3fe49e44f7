"""
Seeded synthetic graphs and graph-signal models.

Every generator is a pure function of its arguments and an integer seed;
identical inputs give bit-identical outputs.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import Graph, SpectralDecomposition

GRAPH_MODELS = ("clustered", "erdos_renyi", "barabasi_albert")
SIGNAL_MODELS = ("bandlimited", "compressible", "inverse_laplacian", "discrete_alphabet")


def trial_seed(root: int, index: int) -> int:
    """Seed for trial ``index`` of a run rooted at ``root``.

    Derived with ``numpy.random.SeedSequence([root, index])`` so it does not
    depend on the order in which trials are executed.
    """
    ss = np.random.SeedSequence([int(root) & (2**64 - 1), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class GraphModelSpec:
    """Random graph model and its parameters.

    ``clustered`` uses ``n_clusters``, ``nodes_per_cluster``, ``p_intra`` and
    ``p_inter``; ``erdos_renyi`` uses ``n_nodes`` and ``p``;
    ``barabasi_albert`` uses ``n_nodes``, ``m0`` and ``m``.
    """

    model: str = "clustered"
    n_clusters: int = 3
    nodes_per_cluster: int = 10
    p_intra: float = 0.7
    p_inter: float = 0.01
    n_nodes: Optional[int] = None
    p: float = 0.3
    m0: int = 4
    m: int = 3
    weighted: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.model not in GRAPH_MODELS:
            raise ValueError(f"unknown graph model {self.model!r}; expected one of {GRAPH_MODELS}")
        for name in ("p_intra", "p_inter", "p"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.model == "clustered":
            if self.n_clusters < 1 or self.nodes_per_cluster < 1:
                raise ValueError("clustered model needs n_clusters >= 1 and nodes_per_cluster >= 1")
            if self.n_nodes is not None and self.n_nodes != self.n_clusters * self.nodes_per_cluster:
                raise ValueError("n_nodes must equal n_clusters * nodes_per_cluster")
        else:
            if self.n_nodes is None or self.n_nodes < 1:
                raise ValueError(f"{self.model} model needs n_nodes >= 1")
        if self.model == "barabasi_albert" and not 1 <= self.m <= self.m0 < self.n_nodes:
            raise ValueError(f"Barabasi-Albert needs 1 <= m <= m0 < N, got m={self.m}, m0={self.m0}, N={self.n_nodes}")

    @property
    def size(self) -> int:
        if self.model == "clustered":
            return self.n_clusters * self.nodes_per_cluster
        return int(self.n_nodes)

    def with_seed(self, seed: int) -> "GraphModelSpec":
        return GraphModelSpec(**{**self.__dict__, "seed": int(seed)})


def cluster_labels(spec: GraphModelSpec) -> np.ndarray:
    """Cluster index of every node (clustered model; zeros otherwise)."""
    if spec.model != "clustered":
        return np.zeros(spec.size, dtype=int)
    return np.repeat(np.arange(spec.n_clusters), spec.nodes_per_cluster)


def gen_graph(spec: GraphModelSpec) -> Graph:
    """Draw a graph from ``spec``; weights are 1 unless ``spec.weighted``."""
    rng = np.random.default_rng(spec.seed)
    n = spec.size
    iu, ju = np.triu_indices(n, 1)
    if spec.model == "clustered":
        labels = cluster_labels(spec)
        prob = np.where(labels[iu] == labels[ju], spec.p_intra, spec.p_inter)
        present = rng.random(iu.size) < prob
    elif spec.model == "erdos_renyi":
        present = rng.random(iu.size) < spec.p
    else:
        present = _barabasi_albert(n, spec.m0, spec.m, rng)[iu, ju]
    a = np.zeros((n, n))
    if spec.weighted:
        weights = rng.uniform(0.5, 1.5, size=iu.size)
        a[iu, ju] = np.where(present, weights, 0.0)
    else:
        a[iu, ju] = present.astype(float)
    return Graph(a + a.T)


def _barabasi_albert(n: int, m0: int, m: int, rng) -> np.ndarray:
    adj = np.zeros((n, n), dtype=bool)
    adj[:m0, :m0] = True
    np.fill_diagonal(adj, False)
    deg = adj.sum(axis=1).astype(float)
    for v in range(m0, n):
        prob = deg[:v] / deg[:v].sum()
        targets = rng.choice(v, size=m, replace=False, p=prob)
        adj[v, targets] = adj[targets, v] = True
        deg[targets] += 1
        deg[v] = m
    return adj


@dataclass(frozen=True)
class SignalModelSpec:
    """Graph-signal model.

    ``variance`` is the variance of the Gaussian in-band coefficients; pass
    ``variance=0.25`` to read N(1, 0.5) as a standard deviation of 0.5.
    """

    model: str = "bandlimited"
    bandwidth: int = 3
    n_signals: int = 15
    mean: float = 1.0
    variance: float = 0.5
    decay: float = 2.0
    alphabet_size: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.model not in SIGNAL_MODELS:
            raise ValueError(f"unknown signal model {self.model!r}; expected one of {SIGNAL_MODELS}")
        if self.n_signals < 1:
            raise ValueError("n_signals must be >= 1")
        if self.bandwidth < 1:
            raise ValueError("bandwidth must be >= 1")
        if self.decay <= 0:
            raise ValueError("decay must be > 0")
        if self.variance < 0:
            raise ValueError("variance must be >= 0")

    def with_seed(self, seed: int) -> "SignalModelSpec":
        return SignalModelSpec(**{**self.__dict__, "seed": int(seed)})


def _check_bandwidth(k: int, n: int):
    if not 1 <= k <= n:
        raise ValueError(f"bandwidth must satisfy 1 <= K <= N={n}, got {k}")


def gen_bandlimited(decomp: SpectralDecomposition, bandwidth: int, n_signals: int, seed: int,
                    mean: float = 1.0, variance: float = 0.5):
    """Signals supported on the ``bandwidth`` smallest-eigenvalue components.

    Returns
    -------
    y : (N, M) ndarray
        ``U @ s``.
    s : (N, M) ndarray
        Coefficients, i.i.d. normal on rows ``0..K-1`` and zero elsewhere.
    """
    u = np.asarray(decomp.eigenvectors)
    n = u.shape[0]
    _check_bandwidth(bandwidth, n)
    rng = np.random.default_rng(seed)
    s = np.zeros((n, n_signals))
    s[:bandwidth] = rng.normal(mean, np.sqrt(variance), size=(bandwidth, n_signals))
    return u @ s, s


def compressible_tail(n: int, bandwidth: int, decay: float) -> np.ndarray:
    """Deterministic tail ``(K_v / k)^(2 beta)`` for 1-based ``k = K_v+1 .. N``."""
    k = np.arange(bandwidth + 1, n + 1, dtype=float)
    return (bandwidth / k) ** (2.0 * decay)


def gen_compressible(decomp: SpectralDecomposition, bandwidth: int = 5, decay: float = 2.0,
                     n_signals: int = 15, seed: int = 0, mean: float = 1.0,
                     variance: float = 0.5) -> np.ndarray:
    """Approximately bandlimited signals with a power-law spectral tail."""
    u = np.asarray(decomp.eigenvectors)
    n = u.shape[0]
    _check_bandwidth(bandwidth, n)
    if decay <= 0:
        raise ValueError("decay must be > 0")
    rng = np.random.default_rng(seed)
    s = np.empty((n, n_signals))
    s[:bandwidth] = rng.normal(mean, np.sqrt(variance), size=(bandwidth, n_signals))
    s[bandwidth:] = compressible_tail(n, bandwidth, decay)[:, None]
    return u @ s


def gen_inverse_laplacian(decomp: SpectralDecomposition, n_signals: int, seed: int,
                          zero_tol: float = 1e-10) -> np.ndarray:
    """Zero-mean Gaussian signals with covariance ``U pinv(Lambda) U^T``."""
    u = np.asarray(decomp.eigenvectors)
    lam = np.asarray(decomp.eigenvalues)
    rng = np.random.default_rng(seed)
    std = np.zeros_like(lam)
    pos = lam > zero_tol
    std[pos] = 1.0 / np.sqrt(lam[pos])
    s = rng.standard_normal((lam.size, n_signals)) * std[:, None]
    return u @ s


def gen_discrete_alphabet(decomp: SpectralDecomposition, bandwidth: int, alphabet_size: int,
                          n_signals: int, seed: int):
    """Bandlimited signals whose in-band coefficients are uniform on ``{1..alphabet_size}``.

    Returns ``(y, s)`` like :func:`gen_bandlimited`.
    """
    if alphabet_size < 2:
        raise ValueError("alphabet_size must be >= 2")
    u = np.asarray(decomp.eigenvectors)
    n = u.shape[0]
    _check_bandwidth(bandwidth, n)
    rng = np.random.default_rng(seed)
    s = np.zeros((n, n_signals))
    s[:bandwidth] = rng.integers(1, alphabet_size + 1, size=(bandwidth, n_signals))
    return u @ s, s


def gen_signals(decomp: SpectralDecomposition, spec: SignalModelSpec):
    """Dispatch on ``spec.model``; returns ``(y, s)`` with ``s=None`` when not defined."""
    if spec.model == "bandlimited":
        return gen_bandlimited(decomp, spec.bandwidth, spec.n_signals, spec.seed, spec.mean, spec.variance)
    if spec.model == "compressible":
        return gen_compressible(decomp, spec.bandwidth, spec.decay, spec.n_signals, spec.seed,
                                spec.mean, spec.variance), None
    if spec.model == "inverse_laplacian":
        return gen_inverse_laplacian(decomp, spec.n_signals, spec.seed), None
    return gen_discrete_alphabet(decomp, spec.bandwidth, spec.alphabet_size, spec.n_signals, spec.seed)
