"""
A miniature Monte-Carlo comparison through the experiment harness.

The same code path drives ``topoinfer experiment configs/*.ini``; here the
configuration is built in memory and kept small enough to finish in well
under a minute. Outputs land in ``demo_output/``.
"""

import sys
from pathlib import Path

from topoinfer.harness import parse_config, run_experiment, write_outputs

CONFIG = """
[experiment]
schema_version = 1
kind = table
trials = 3
seed = 1
bandwidth = 3
bases = estimated

[graph]
n_clusters = 3
nodes_per_cluster = 6

[signals]
n_signals = 40
mean = 0
variance = 1

[methods]
names = tv_gl, esa_gl, dong
mu_grid = 0.1, 1, 10
"""

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
result = run_experiment(parse_config(CONFIG))
paths = write_outputs(result, out)
print(f"{len(result.rows)} trial rows, {len(paths)} files written to {out}/")
print(f"{'method':8s} {'mu':>5s} {'rho':>6s} {'E0':>6s} {'F':>6s}")
for row in result.best:
    print(f"{row['method']:8s} {row['mu']:5g} {row['rho_mean']:6.3f} {row['e0_mean']:6.3f} {row['f_measure_mean']:6.3f}")
