"""Tucker-factorized 3D convolutions: compression, execution, and accounting."""

from .multilinear import (
    frobenius_norm_sq,
    leading_left_singular_vectors,
    mode_n_fold,
    mode_n_product,
    mode_n_unfold,
)
from .tucker import (
    ConvKernel,
    RankPolicy,
    TuckerFactors,
    ev_grid,
    ev_grid_csv,
    explained_variance,
    hooi_refine,
    hosvd_partial,
    reconstruct,
    select_ranks,
)
from .conv import (
    ConvSpec,
    MacTally,
    conv3d_direct,
    conv3d_tucker,
    output_dims,
    transposed_output_dims,
)
from .cost import (
    ArchDesc,
    CostReport,
    LayerDesc,
    analyze_arch,
    arch_from_json,
    arch_to_json,
    compression_ratio,
    flops_direct,
    flops_tucker,
    params_direct,
    params_tucker,
)
from .prune import PruneSpec, channel_l2_norms, prune_channels
from .container import (
    Container,
    ContainerError,
    TensorEntry,
    assemble_factors,
    factor_entries,
    read_container,
    write_container,
)
from .bench import BenchResult, results_csv, speedup, time_forward
from .rng import Xoshiro256StarStar

__version__ = "0.1.0"
