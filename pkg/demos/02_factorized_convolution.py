"""Run a convolution as the equivalent three-stage factorized sequence.

The factorized layer is: (1) a 1x1x1 projection onto T_I channels, (2) the
spatial core convolution carrying the original stride and padding, (3) a
1x1x1 projection back to O channels. With the same factors the sequence is
algebraically identical to convolving with the reconstructed kernel.
"""

import numpy as np

from tuckerforge import (
    ConvKernel,
    ConvSpec,
    conv3d_direct,
    conv3d_tucker,
    hosvd_partial,
    reconstruct,
)

rng = np.random.default_rng(1)

kernel = ConvKernel(rng.standard_normal((32, 16, 3, 3, 3)))
x = rng.standard_normal((16, 12, 12, 12))
spec = ConvSpec(stride=(2, 2, 2), padding=(1, 1, 1))

factors = hosvd_partial(kernel, 8, 8)
print(f"kernel   (O, I, K^3): {kernel.weights.shape}")
print(f"core     (T_O, T_I, K^3): {factors.core.shape}")
print(f"u_in {factors.u_in.shape}, u_out {factors.u_out.shape}")

direct_on_original = conv3d_direct(x, kernel, spec)
direct_on_lowrank = conv3d_direct(x, reconstruct(factors), spec)
factorized = conv3d_tucker(x, factors, spec)
print(f"\noutput shape: {factorized.shape}")

# the sequence and the reconstructed kernel agree to float precision
dev = np.max(np.abs(factorized - direct_on_lowrank)) / np.max(np.abs(direct_on_lowrank))
print(f"factorized vs direct-on-reconstruction: {dev:.2e} (exact identity)")

# against the ORIGINAL kernel the gap is the rank truncation error
gap = np.max(np.abs(factorized - direct_on_original)) / np.max(np.abs(direct_on_original))
print(f"factorized vs direct-on-original:       {gap:.2e} (truncation at ranks 8x8)")

# at full rank even that gap vanishes
full = hosvd_partial(kernel, 32, 16)
gap_full = np.max(np.abs(conv3d_tucker(x, full, spec) - direct_on_original))
gap_full /= np.max(np.abs(direct_on_original))
print(f"full-rank factorized vs direct:         {gap_full:.2e}")
