"""Parameter and FLOP accounting for a whole architecture.

Sweeps the downsampling factor over the bundled synthetic U-Net-like model
and prints the aggregate reductions, then the per-layer table for one DF.
FLOPs are multiply-accumulates; pass double_flops=True for the 2x unit.
"""

from tuckerforge import RankPolicy, analyze_arch
from tuckerforge.zoo import unet3d_synth

arch = unet3d_synth()
print(f"model: {arch.model}, {len(arch.layers)} layers")

header = f"{'DF':>5} {'M-param':>9} {'dP%':>7} {'CR':>7} {'G-FLOPs':>9} {'dF%':>7}"
print("\n" + header)
print("-" * len(header))
for df in (0.9, 0.7, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05):
    # transposed kernels are decomposed for the accounting too; execution of
    # transposed layers stays out of scope
    report = analyze_arch(arch, RankPolicy(df=df), include_transposed=True)
    print(f"{df:5.2f} {report.params_compressed / 1e6:9.2f} "
          f"{report.params_delta_pct:7.2f} {report.cr:7.1f} "
          f"{report.flops_compressed / 1e9:9.1f} {report.flops_delta_pct:7.2f}")

report = analyze_arch(arch, RankPolicy(df=0.5), include_transposed=True)
print(f"\nper-layer breakdown at DF 0.5:\n")
print(report.to_table())
