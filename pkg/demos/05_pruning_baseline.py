"""Magnitude-based filter pruning, the simple comparator to factorization.

Whole output channels are zeroed, smallest L2 norm first. Shapes stay
intact, so the "compression" is sparsity rather than fewer stored numbers.
Compare the retained kernel energy against a Tucker factorization at a
matched parameter budget.
"""

import numpy as np

from tuckerforge import (
    ConvKernel,
    channel_l2_norms,
    explained_variance,
    hosvd_partial,
    params_tucker,
    prune_channels,
)
from tuckerforge.cost import LayerDesc
from tuckerforge.prune import PruneSpec
from tuckerforge.conv import ConvSpec

rng = np.random.default_rng(5)
kernel = ConvKernel(rng.standard_normal((32, 32, 3, 3, 3)))

norms = channel_l2_norms(kernel)
print(f"channel norms: min {norms.min():.2f}, median {np.median(norms):.2f}, "
      f"max {norms.max():.2f}")

total = kernel.weights.size
print(f"\n{'fraction':>9} {'zeroed params':>14} {'kernel energy kept':>19}")
for fraction in (0.25, 0.5, 0.75):
    pruned = prune_channels(kernel, PruneSpec(fraction))
    zeroed = total - np.count_nonzero(pruned.weights)
    kept = np.sum(pruned.weights ** 2) / np.sum(kernel.weights ** 2)
    print(f"{fraction:9.2f} {zeroed:14d} {kept:19.4f}")

# Tucker at the same stored-parameter budget picks the best subspaces
# instead of whole channels. On a random kernel (the worst case for both)
# it only edges out pruning; on trained kernels, whose channel spectra
# decay fast, the gap widens dramatically.
layer = LayerDesc("l", "conv3d", 32, 32, (3, 3, 3), ConvSpec(), (8, 8, 8))
half_budget = total // 2
for t in range(32, 0, -1):
    if params_tucker(layer, t, t) <= half_budget:
        break
f = hosvd_partial(kernel, t, t)
print(f"\nTucker at the same 50% budget: ranks ({t}, {t}), "
      f"explained variance {explained_variance(kernel, f):.4f}")
