"""Reference execution of direct and Tucker-factorized 3D convolutions.

Feature maps are 4-way arrays ``(C, H, W, D)``. The direct path implements
the plain quadruple-sum convolution (zero padding, no bias by default); the
factorized path chains a 1x1x1 input projection, the core convolution
carrying the original stride/padding, and a 1x1x1 output projection.

The default execution accumulates kernel taps in a fixed (i, j, k, m) order,
one elementwise add per tap, so results are bit-identical to a scalar loop
nest with the same ordering. ``blocked=True`` switches to a per-tap GEMM
formulation that reassociates the channel sum; it is much faster and agrees
with the exact path to normal floating-point tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tucker import ConvKernel, TuckerFactors

__all__ = [
    "ConvSpec",
    "MacTally",
    "output_dims",
    "transposed_output_dims",
    "conv3d_direct",
    "conv3d_tucker",
]


@dataclass(frozen=True)
class ConvSpec:
    """Stride and zero-padding triples for a 3D convolution."""

    stride: tuple[int, int, int] = (1, 1, 1)
    padding: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        stride = tuple(int(s) for s in self.stride)
        padding = tuple(int(p) for p in self.padding)
        if len(stride) != 3 or any(s < 1 for s in stride):
            raise ValueError(f"stride must be three positive ints, got {self.stride}")
        if len(padding) != 3 or any(p < 0 for p in padding):
            raise ValueError(f"padding must be three nonnegative ints, got {self.padding}")
        object.__setattr__(self, "stride", stride)
        object.__setattr__(self, "padding", padding)


class MacTally:
    """Accumulates the number of scalar multiply-accumulates executed."""

    def __init__(self):
        self.total = 0

    def add(self, n: int):
        self.total += int(n)


def output_dims(
    in_dims: tuple[int, int, int],
    kernel: tuple[int, int, int],
    spec: ConvSpec,
) -> tuple[int, int, int]:
    """Spatial output extents: floor((H - K + 2P) / S) + 1 per axis."""
    out = []
    for h, k, s, p in zip(in_dims, kernel, spec.stride, spec.padding):
        if h + 2 * p < k:
            raise ValueError(
                f"padded extent {h + 2 * p} smaller than kernel extent {k}"
            )
        o = (h - k + 2 * p) // s + 1
        if o < 1:
            raise ValueError(f"non-positive output extent for axis ({h=}, {k=}, {s=}, {p=})")
        out.append(o)
    return tuple(out)


def transposed_output_dims(
    in_dims: tuple[int, int, int],
    kernel: tuple[int, int, int],
    spec: ConvSpec,
) -> tuple[int, int, int]:
    """Output extents of a transposed convolution: (H-1)*S + K - 2P per axis."""
    out = []
    for h, k, s, p in zip(in_dims, kernel, spec.stride, spec.padding):
        o = (h - 1) * s + k - 2 * p
        if o < 1:
            raise ValueError(f"non-positive output extent for axis ({h=}, {k=}, {s=}, {p=})")
        out.append(o)
    return tuple(out)


def _check_input(x: np.ndarray, channels: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4:
        raise ValueError(f"feature map must have 4 axes (C, H, W, D), got {x.ndim}")
    if x.shape[0] != channels:
        raise ValueError(f"feature map has {x.shape[0]} channels, kernel expects {channels}")
    return x


def conv3d_direct(
    x: np.ndarray,
    k: ConvKernel,
    spec: ConvSpec = ConvSpec(),
    bias: np.ndarray | None = None,
    blocked: bool = False,
    tally: MacTally | None = None,
) -> np.ndarray:
    """Direct 3D convolution of ``x (I, H, W, D)`` with kernel ``k``.

    Out-of-range taps read zero. ``bias``, if given, is one value per output
    channel added after the sum.
    """
    w = k.weights
    x = _check_input(x, k.i)
    o, i, kh, kw, kd = w.shape
    sh, sw, sd = spec.stride
    ph, pw, pd = spec.padding
    hd, wd_, dd = output_dims(x.shape[1:], (kh, kw, kd), spec)

    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw), (pd, pd)))
    out = np.zeros((o, hd, wd_, dd))
    n_vox = hd * wd_ * dd

    if blocked:
        # one GEMM per spatial tap; channel sum reassociated inside BLAS.
        # Per-tap weight matrices must be contiguous or matmul leaves BLAS.
        w_taps = np.ascontiguousarray(w.reshape(o, i, -1).transpose(2, 0, 1))
        out_flat = out.reshape(o, n_vox)
        for t, (j, kk, m) in enumerate(np.ndindex(kh, kw, kd)):
            win = xp[
                :,
                j : j + sh * (hd - 1) + 1 : sh,
                kk : kk + sw * (wd_ - 1) + 1 : sw,
                m : m + sd * (dd - 1) + 1 : sd,
            ].reshape(i, n_vox)
            out_flat += w_taps[t] @ win
            if tally is not None:
                tally.add(o * i * n_vox)
    else:
        for ci in range(i):
            for j in range(kh):
                for kk in range(kw):
                    for m in range(kd):
                        win = xp[
                            ci,
                            j : j + sh * (hd - 1) + 1 : sh,
                            kk : kk + sw * (wd_ - 1) + 1 : sw,
                            m : m + sd * (dd - 1) + 1 : sd,
                        ]
                        out += w[:, ci, j, kk, m, None, None, None] * win[None]
                        if tally is not None:
                            tally.add(o * n_vox)

    if bias is not None:
        bias = np.asarray(bias, dtype=np.float64)
        if bias.shape != (o,):
            raise ValueError(f"bias must have shape ({o},), got {bias.shape}")
        out += bias[:, None, None, None]
    return out


def conv3d_tucker(
    x: np.ndarray,
    f: TuckerFactors,
    spec: ConvSpec = ConvSpec(),
    bias: np.ndarray | None = None,
    blocked: bool = False,
    tally: MacTally | None = None,
) -> np.ndarray:
    """Three-stage factorized convolution equivalent to the reconstructed kernel.

    Stage 1 projects input channels onto the rank space (1x1x1, stride 1,
    no padding), stage 2 convolves with the core under the original stride
    and padding, stage 3 projects back to the output channels. ``bias``
    applies after stage 3.
    """
    x = _check_input(x, f.i)
    pointwise = ConvSpec()
    w_in = f.u_in.T.reshape(f.t_i, f.i, 1, 1, 1)
    w_out = f.u_out.reshape(f.o, f.t_o, 1, 1, 1)

    h = conv3d_direct(x, ConvKernel(w_in, "pointwise"), pointwise, blocked=blocked, tally=tally)
    h = conv3d_direct(h, ConvKernel(f.core, "conv3d"), spec, blocked=blocked, tally=tally)
    return conv3d_direct(
        h, ConvKernel(w_out, "pointwise"), pointwise, bias=bias, blocked=blocked, tally=tally
    )
