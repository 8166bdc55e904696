"""Wall-clock speedup of the factorized layer over the direct one.

FLOP reductions do not translate one-to-one into runtime: the three-stage
sequence adds projection work and memory traffic, so mild factorizations
(DF near 1) can be slower than the original layer while aggressive ones
win clearly. Means and sample std over warmed-up repeat runs.
"""

import numpy as np

from tuckerforge import ConvKernel, ConvSpec, RankPolicy, results_csv, select_ranks
from tuckerforge.bench import (
    direct_forward,
    thread_limit,
    time_forward,
    tucker_forward,
    with_speedup,
)
from tuckerforge.tucker import hosvd_partial

rng = np.random.default_rng(11)

C = 128
kernel = ConvKernel(rng.standard_normal((C, C, 3, 3, 3)) / np.sqrt(C * 27))
spec = ConvSpec(stride=(2, 2, 2), padding=(1, 1, 1))
x = rng.standard_normal((C, 24, 24, 24))

results = []
with thread_limit(2):  # the parallel conv path; default CLI runs use 1
    base = time_forward(direct_forward(kernel, spec), x,
                        runs=10, warmup=3, label="direct[threads=2]")
    results.append(with_speedup(base, base))
    for df in (0.9, 0.5, 0.2, 0.1):
        t_o, t_i = select_ranks(RankPolicy(df=df), C, C)
        factors = hosvd_partial(kernel, t_o, t_i)
        r = time_forward(tucker_forward(factors, spec), x,
                         runs=10, warmup=3, label=f"tucker[threads=2]", df=df)
        results.append(with_speedup(base, r))

print(results_csv(results))
print("speedup < 1 at high DF is expected: three layers cost more than one "
      "when almost nothing is cut")
