"""Partial Tucker decomposition of 3D convolution kernels.

A kernel ``(O, I, K_H, K_W, K_D)`` is factorized along its two channel modes
into a core ``(T_O, T_I, K_H, K_W, K_D)`` and orthonormal channel bases
``u_out (O x T_O)`` and ``u_in (I x T_I)``. Spatial modes are never
decomposed; their extents are small and contribute nothing to compression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .multilinear import (
    frobenius_norm_sq,
    leading_left_singular_vectors,
    mode_n_product,
    mode_n_unfold,
)

__all__ = [
    "ConvKernel",
    "TuckerFactors",
    "RankPolicy",
    "select_ranks",
    "round_half_away_from_zero",
    "hosvd_partial",
    "hooi_refine",
    "reconstruct",
    "explained_variance",
    "ev_grid",
    "ev_grid_csv",
]

KERNEL_KINDS = ("conv3d", "convtranspose3d", "pointwise")


@dataclass(frozen=True)
class ConvKernel:
    """A 5-way convolution weight tensor with axes (O, I, K_H, K_W, K_D).

    Transposed-convolution weights are stored with the same (O, I, spatial)
    axis order; callers normalize their native (C_in, C_out, ...) layout
    before constructing the kernel.
    """

    weights: np.ndarray
    kind: str = "conv3d"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 5:
            raise ValueError(f"kernel must have 5 axes, got {w.ndim}")
        if min(w.shape) < 1:
            raise ValueError(f"kernel extents must be >= 1, got {w.shape}")
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        object.__setattr__(self, "weights", w)

    @property
    def o(self) -> int:
        return self.weights.shape[0]

    @property
    def i(self) -> int:
        return self.weights.shape[1]

    @property
    def spatial(self) -> tuple[int, int, int]:
        return self.weights.shape[2:]

    @property
    def is_pointwise(self) -> bool:
        return self.spatial == (1, 1, 1)


@dataclass(frozen=True)
class TuckerFactors:
    """Core tensor plus the two orthonormal channel factor matrices."""

    core: np.ndarray
    u_out: np.ndarray
    u_in: np.ndarray
    kind: str = "conv3d"

    def __post_init__(self):
        core = np.asarray(self.core, dtype=np.float64)
        u_out = np.asarray(self.u_out, dtype=np.float64)
        u_in = np.asarray(self.u_in, dtype=np.float64)
        if core.ndim != 5:
            raise ValueError(f"core must have 5 axes, got {core.ndim}")
        t_o, t_i = core.shape[:2]
        if u_out.ndim != 2 or u_out.shape[1] != t_o:
            raise ValueError(f"u_out shape {u_out.shape} does not match core rank {t_o}")
        if u_in.ndim != 2 or u_in.shape[1] != t_i:
            raise ValueError(f"u_in shape {u_in.shape} does not match core rank {t_i}")
        if u_out.shape[0] < t_o or u_in.shape[0] < t_i:
            raise ValueError("ranks exceed channel counts")
        for name, u in (("u_out", u_out), ("u_in", u_in)):
            gram = u.T @ u
            if np.max(np.abs(gram - np.eye(u.shape[1]))) > 1e-10:
                raise ValueError(f"{name} columns are not orthonormal")
        object.__setattr__(self, "core", core)
        object.__setattr__(self, "u_out", u_out)
        object.__setattr__(self, "u_in", u_in)

    @property
    def t_o(self) -> int:
        return self.core.shape[0]

    @property
    def t_i(self) -> int:
        return self.core.shape[1]

    @property
    def o(self) -> int:
        return self.u_out.shape[0]

    @property
    def i(self) -> int:
        return self.u_in.shape[0]


@dataclass(frozen=True)
class RankPolicy:
    """Downsampling factor and rank floor controlling compression strength."""

    df: float
    min_rank: int = 8

    def __post_init__(self):
        if not 0.0 < self.df <= 1.0:
            raise ValueError(f"downsampling factor must be in (0, 1], got {self.df}")
        if self.min_rank < 1:
            raise ValueError(f"min_rank must be >= 1, got {self.min_rank}")


def round_half_away_from_zero(x: float) -> int:
    """Deterministic rounding: 2.5 -> 3, -2.5 -> -3."""
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def select_ranks(policy: RankPolicy, o: int, i: int) -> tuple[int, int]:
    """Ranks from channel counts: round df*c, clamp to [min(min_rank, c), c]."""

    def pick(c: int) -> int:
        if c < 1:
            raise ValueError(f"channel count must be >= 1, got {c}")
        t = round_half_away_from_zero(policy.df * c)
        return min(max(t, min(policy.min_rank, c)), c)

    return pick(o), pick(i)


def hosvd_partial(k: ConvKernel, t_o: int, t_i: int) -> TuckerFactors:
    """Single-pass higher-order SVD truncated to ranks (t_o, t_i).

    Factor matrices are the leading left singular vectors of the mode-0 and
    mode-1 unfoldings; the core is the kernel projected onto both bases.
    Ranks are bounded by the channel counts and, for degenerate kernels,
    by the unfolding column counts (t_o <= I*K^3, t_i <= O*K^3): a basis
    cannot have more orthonormal columns than the unfolding supports.
    """
    w = k.weights
    if not np.all(np.isfinite(w)):
        raise ValueError("kernel has non-finite entries")
    if not 1 <= t_o <= k.o:
        raise ValueError(f"t_o={t_o} out of range [1, {k.o}]")
    if not 1 <= t_i <= k.i:
        raise ValueError(f"t_i={t_i} out of range [1, {k.i}]")
    u_out = leading_left_singular_vectors(mode_n_unfold(w, 0), t_o)
    u_in = leading_left_singular_vectors(mode_n_unfold(w, 1), t_i)
    core = mode_n_product(mode_n_product(w, u_out.T, 0), u_in.T, 1)
    return TuckerFactors(core=core, u_out=u_out, u_in=u_in, kind=k.kind)


def reconstruct(f: TuckerFactors) -> ConvKernel:
    """Expand factors back to a full (O, I, K_H, K_W, K_D) kernel."""
    w = mode_n_product(mode_n_product(f.core, f.u_out, 0), f.u_in, 1)
    return ConvKernel(weights=w, kind=f.kind)


def explained_variance(k: ConvKernel, f: TuckerFactors) -> float:
    """Retained kernel energy: 1 - ||K - K_hat||^2 / ||K||^2."""
    total = frobenius_norm_sq(k.weights)
    if total == 0.0:
        raise ValueError("explained variance undefined for a zero kernel")
    resid = frobenius_norm_sq(k.weights - reconstruct(f).weights)
    return 1.0 - resid / total


def hooi_refine(
    k: ConvKernel,
    f: TuckerFactors,
    max_iters: int = 20,
    tol: float = 1e-6,
) -> TuckerFactors:
    """Higher-order orthogonal iteration starting from ``f``.

    Each sweep re-fits one channel basis against the kernel projected onto
    the other, which can only improve the fit; stops once the explained
    variance gain per sweep drops below ``tol``.
    """
    if max_iters < 0:
        raise ValueError("max_iters must be >= 0")
    if max_iters == 0:
        return f
    w = k.weights
    u_out, u_in = f.u_out, f.u_in
    ev_prev = explained_variance(k, f)
    best = f
    for _ in range(max_iters):
        u_out = leading_left_singular_vectors(
            mode_n_unfold(mode_n_product(w, u_in.T, 1), 0), f.t_o
        )
        u_in = leading_left_singular_vectors(
            mode_n_unfold(mode_n_product(w, u_out.T, 0), 1), f.t_i
        )
        core = mode_n_product(mode_n_product(w, u_out.T, 0), u_in.T, 1)
        cand = TuckerFactors(core=core, u_out=u_out, u_in=u_in, kind=k.kind)
        ev = explained_variance(k, cand)
        if ev > ev_prev:
            best = cand
        if ev - ev_prev < tol:
            break
        ev_prev = ev
    return best


def ev_grid(
    k: ConvKernel,
    t_o_list: list[int],
    t_i_list: list[int],
) -> np.ndarray:
    """Explained variance of the HOSVD at every rank pair.

    Rows are indexed by ``t_o_list``, columns by ``t_i_list``; both lists
    must be strictly increasing and within the channel bounds. The two
    singular bases are computed once at the largest requested ranks and
    sliced per cell, which coincides with per-cell HOSVD because truncated
    bases of the same unfolding are nested.
    """
    for name, lst, bound in (("t_o", t_o_list, k.o), ("t_i", t_i_list, k.i)):
        if not lst:
            raise ValueError(f"{name} list is empty")
        if any(b <= a for a, b in zip(lst, lst[1:])):
            raise ValueError(f"{name} list must be strictly increasing")
        if lst[0] < 1 or lst[-1] > bound:
            raise ValueError(f"{name} list out of range [1, {bound}]")
    w = k.weights
    if not np.all(np.isfinite(w)):
        raise ValueError("kernel has non-finite entries")
    u_out_full = leading_left_singular_vectors(mode_n_unfold(w, 0), max(t_o_list))
    u_in_full = leading_left_singular_vectors(mode_n_unfold(w, 1), max(t_i_list))
    grid = np.empty((len(t_o_list), len(t_i_list)))
    for a, t_o in enumerate(t_o_list):
        for b, t_i in enumerate(t_i_list):
            u_out = u_out_full[:, :t_o]
            u_in = u_in_full[:, :t_i]
            core = mode_n_product(mode_n_product(w, u_out.T, 0), u_in.T, 1)
            f = TuckerFactors(core=core, u_out=u_out, u_in=u_in, kind=k.kind)
            grid[a, b] = explained_variance(k, f)
    return grid


def ev_grid_csv(grid: np.ndarray, t_o_list: list[int], t_i_list: list[int]) -> str:
    """Render a grid as CSV: header row of t_i values, first column t_o."""
    lines = ["t_o," + ",".join(str(t) for t in t_i_list)]
    for a, t_o in enumerate(t_o_list):
        cells = ",".join(format(v, ".12g") for v in grid[a])
        lines.append(f"{t_o},{cells}")
    return "\n".join(lines) + "\n"
