"""Magnitude-based filter pruning: the channel-zeroing comparator.

Whole output channels (filters) are zeroed, smallest L2 norm first. Tensor
shapes never change; sparsity is realized as exact zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tucker import ConvKernel, round_half_away_from_zero

__all__ = ["PruneSpec", "channel_l2_norms", "prune_channels", "pruned_channel_indices"]


@dataclass(frozen=True)
class PruneSpec:
    """Fraction of output channels to zero."""

    fraction: float

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction must be in [0, 1], got {self.fraction}")


def channel_l2_norms(k: ConvKernel) -> np.ndarray:
    """L2 norm of each output channel's (I, K_H, K_W, K_D) slice."""
    flat = k.weights.reshape(k.o, -1)
    return np.sqrt(np.einsum("ij,ij->i", flat, flat))


def pruned_channel_indices(k: ConvKernel, spec: PruneSpec) -> list[int]:
    """Indices of the round(fraction*O) smallest-norm channels.

    Ties break toward the lower channel index so the selection is
    deterministic.
    """
    n = round_half_away_from_zero(spec.fraction * k.o)
    n = min(max(n, 0), k.o)
    if n == 0:
        return []
    norms = channel_l2_norms(k)
    order = sorted(range(k.o), key=lambda c: (norms[c], c))
    return sorted(order[:n])


def prune_channels(k: ConvKernel, spec: PruneSpec) -> ConvKernel:
    """Zero the selected channels; every other entry is bit-identical."""
    idx = pruned_channel_indices(k, spec)
    if not idx:
        return k
    w = k.weights.copy()
    w[idx] = 0.0
    return ConvKernel(weights=w, kind=k.kind)
