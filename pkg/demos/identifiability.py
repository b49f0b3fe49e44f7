"""
How much does a partial eigenbasis pin down the Laplacian?

Knowing the K smoothest eigenvectors turns the Laplacian conditions into a
linear system F x = b over the edge weights and the unknown eigenvalues.
This script assembles that system for a clustered graph, reports its rank
and kernel, and shows why uniqueness is rare: the complete graph shares
every eigenvector, so it is always a second feasible point.
"""

import numpy as np

from topoinfer.graph import laplacian_from_adjacency, spectral_decomposition
from topoinfer.identifiability import (assemble_system, duplication_matrix, nonnegative_singleton,
                                       planted_solution, rank_analysis)
from topoinfer.synth import GraphModelSpec, gen_graph

print("duplication matrix for N = 3 (transposed):")
print(duplication_matrix(3).T.astype(int))

graph = gen_graph(GraphModelSpec("clustered", n_clusters=3, nodes_per_cluster=4, p_intra=0.9,
                                 p_inter=0.1, seed=0))
lap = np.asarray(laplacian_from_adjacency(graph))
decomp = spectral_decomposition(lap)
n = lap.shape[0]

for k in (2, 3, 6, n):
    system = assemble_system(decomp.eigenvectors[:, :k], np.trace(lap))
    x0 = planted_solution(system, lap)
    verdict = rank_analysis(system, n_components=graph.n_components())
    print(f"K={k:2d}  F {system.shape}  rank {verdict.rank:3d}  nullity {verdict.nullity:3d}  "
          f"regime {verdict.regime:15s}  planted residual {system.residual(x0):.1e}")

# The kernel is (N-K)(N-K+1)/2 + K - 2: symmetric maps on the orthogonal
# complement plus the free in-band eigenvalues, fixed trace removed.
k = 3
system = assemble_system(decomp.eigenvectors[:, :k], np.trace(lap))
single, _ = nonnegative_singleton(system, planted_solution(system, lap))
print(f"\nwith nonnegativity and ordered eigenvalues, unique at K={k}? {single}")

complete = np.full(system.n_pairs, np.trace(lap) / (n * (n - 1)))
x_c = np.concatenate([complete, np.full(k - 1, np.trace(lap) / (n - 1))])
print(f"complete graph residual in the same system: {system.residual(x_c):.1e}")

# Two nodes are the exception: a single weight and a single eigenvalue.
u = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
tiny = rank_analysis(assemble_system(u, 2.0), n_components=1)
print(f"N=2, K=2: rank {tiny.rank}, singleton {tiny.singleton}, sparsity bound {tiny.sparsity_bound}")
