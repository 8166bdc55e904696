"""Explained-variance grid over rank pairs.

Every cell decomposes the kernel at one (t_o, t_i) pair and scores how much
kernel energy the reconstruction retains. Rows and columns are
non-decreasing because truncated singular bases are nested. The CSV output
is the same format the `tuckerforge ev-grid` subcommand emits.
"""

import numpy as np

from tuckerforge import ConvKernel, ev_grid, ev_grid_csv

rng = np.random.default_rng(3)

# a kernel with a planted low-rank structure plus noise, so the grid shows
# the knee that real trained kernels exhibit
o, i = 16, 16
u = rng.standard_normal((o, 4))
v = rng.standard_normal((i, 4))
core = rng.standard_normal((4, 4, 3, 3, 3))
planted = np.einsum("or,is,rsjkm->oijkm", u, v, core)
kernel = ConvKernel(planted + 0.05 * rng.standard_normal(planted.shape))

ranks = [1, 2, 3, 4, 6, 8, 12, 16]
grid = ev_grid(kernel, ranks, ranks)

print("explained variance (rows t_o, cols t_i):\n")
print("t_o\\t_i " + " ".join(f"{t:6d}" for t in ranks))
for a, t_o in enumerate(ranks):
    print(f"{t_o:7d} " + " ".join(f"{grid[a, b]:6.3f}" for b in range(len(ranks))))

print("\nnote the jump once both ranks reach the planted rank 4")
print("\nCSV form (first lines):")
print("\n".join(ev_grid_csv(grid, ranks, ranks).splitlines()[:4]))
