# A small seeded sweep through the harness; rows land in one CSV.
import sys
import tempfile
from pathlib import Path

from overdict.harness import ExperimentConfig, expand_grid, sweep

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="overdict-sweep-"))
base = ExperimentConfig(d=64, r=128, s=2, dictionary="hadamard", rho=0.55, eps_dict=0.3, max_edges=50_000)
grid = expand_grid(base, {"n": [2048, 4096], "seed": [0, 1]})
for row in sweep(grid, out):
    print(row.config.n, row.config.seed, row.status, row.recovered_atoms,
          "%.3f" % row.eps_A_stage1, row.exact_recovery)
print("report:", out / "report.csv")
