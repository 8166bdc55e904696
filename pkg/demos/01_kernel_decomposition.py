"""Decompose a 3D convolution kernel along its channel modes.

A kernel (O, I, K, K, K) is factorized into a small core plus two
orthonormal channel bases. The explained variance tells how much kernel
energy survives at a given rank pair, and HOOI sweeps can squeeze out a
little more than the single-pass HOSVD.
"""

import numpy as np

from tuckerforge import (
    ConvKernel,
    RankPolicy,
    explained_variance,
    hooi_refine,
    hosvd_partial,
    reconstruct,
    select_ranks,
)

rng = np.random.default_rng(0)

# A synthetic 64 -> 64 channel kernel. Real kernels are far from random and
# compress much better; random ones are the worst case for low-rank fits.
kernel = ConvKernel(rng.standard_normal((64, 64, 3, 3, 3)))

# The downsampling factor maps channel counts to Tucker ranks,
# e.g. DF 0.3 with 64 channels -> rank 19 (never below the floor of 8).
for df in (0.9, 0.5, 0.3, 0.1):
    t_o, t_i = select_ranks(RankPolicy(df=df), kernel.o, kernel.i)
    factors = hosvd_partial(kernel, t_o, t_i)
    ev = explained_variance(kernel, factors)
    print(f"DF {df:4.1f} -> ranks ({t_o:2d}, {t_i:2d})  explained variance {ev:.4f}")

# At full rank the factorization is exact.
full = hosvd_partial(kernel, kernel.o, kernel.i)
err = np.linalg.norm(reconstruct(full).weights - kernel.weights)
err /= np.linalg.norm(kernel.weights)
print(f"\nfull-rank reconstruction relative error: {err:.2e}")

# HOOI refinement: alternating re-fits of the two bases. Never worse than
# HOSVD, usually a modest gain on kernels without sharp spectral decay.
t_o, t_i = select_ranks(RankPolicy(df=0.3), kernel.o, kernel.i)
hosvd = hosvd_partial(kernel, t_o, t_i)
hooi = hooi_refine(kernel, hosvd, max_iters=20, tol=1e-8)
print(f"\nranks ({t_o}, {t_i}):")
print(f"  HOSVD explained variance {explained_variance(kernel, hosvd):.6f}")
print(f"  HOOI  explained variance {explained_variance(kernel, hooi):.6f}")
