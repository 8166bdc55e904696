"""Bundled synthetic architectures and random-weight fixtures.

The shipped "unet3d-synth" layer list follows the familiar encoder/decoder
recipe for volumetric segmentation: two 3x3x3 convolutions per stage,
stride-2 downsampling, transposed 2x2x2 upsampling with skip concatenation,
and a pointwise segmentation head. It is NOT any published network's exact
layer list; it exists so cost reports and demos have a realistic shape to
chew on.
"""

from __future__ import annotations

import json

import numpy as np

from .container import Container, TensorEntry
from .conv import ConvSpec
from .cost import ArchDesc, LayerDesc, arch_to_json

__all__ = ["unet3d_synth", "random_kernel", "random_weights_container"]

_S1 = ConvSpec(stride=(1, 1, 1), padding=(1, 1, 1))
_S2 = ConvSpec(stride=(2, 2, 2), padding=(1, 1, 1))
_UP = ConvSpec(stride=(2, 2, 2), padding=(0, 0, 0))
_PW = ConvSpec(stride=(1, 1, 1), padding=(0, 0, 0))


def unet3d_synth(
    patch: int = 128,
    features: tuple[int, ...] = (32, 64, 128, 256, 320),
    in_channels: int = 1,
    num_classes: int = 117,
) -> ArchDesc:
    """Five-stage 3D U-Net-like architecture on a cubic patch."""
    k3 = (3, 3, 3)
    k2 = (2, 2, 2)
    dims = [patch // (2 ** s) for s in range(len(features))]
    layers = [
        LayerDesc("stem", "conv3d", in_channels, features[0], k3, _S1, (patch,) * 3),
        LayerDesc("enc0b", "conv3d", features[0], features[0], k3, _S1, (patch,) * 3),
    ]
    for s in range(1, len(features)):
        d_in, d_out = dims[s - 1], dims[s]
        layers.append(LayerDesc(
            f"enc{s}a", "conv3d", features[s - 1], features[s], k3, _S2, (d_in,) * 3))
        layers.append(LayerDesc(
            f"enc{s}b", "conv3d", features[s], features[s], k3, _S1, (d_out,) * 3))
    for s in range(len(features) - 1, 0, -1):
        d_lo, d_hi = dims[s], dims[s - 1]
        f_lo, f_hi = features[s], features[s - 1]
        layers.append(LayerDesc(
            f"up{s - 1}", "convtranspose3d", f_lo, f_hi, k2, _UP, (d_lo,) * 3))
        # decoder convs see the transposed output concatenated with the skip
        layers.append(LayerDesc(
            f"dec{s - 1}a", "conv3d", 2 * f_hi, f_hi, k3, _S1, (d_hi,) * 3))
        layers.append(LayerDesc(
            f"dec{s - 1}b", "conv3d", f_hi, f_hi, k3, _S1, (d_hi,) * 3))
    layers.append(LayerDesc(
        "head", "pointwise", features[0], num_classes, (1, 1, 1), _PW, (patch,) * 3))
    return ArchDesc(layers=tuple(layers), model="unet3d-synth")


def random_kernel(rng: np.random.Generator, l: LayerDesc) -> np.ndarray:
    """Gaussian weights shaped (O, I, K_H, K_W, K_D), fan-in scaled."""
    shape = (l.out_channels, l.in_channels, *l.kernel)
    fan_in = l.in_channels * l.kernel_volume()
    return rng.standard_normal(shape) / np.sqrt(fan_in)


def random_weights_container(a: ArchDesc, seed: int = 0, with_bias: bool = False) -> Container:
    """Container holding one random kernel (and optional bias) per layer."""
    rng = np.random.default_rng(seed)
    entries = []
    for l in a.layers:
        entries.append(TensorEntry(name=f"{l.name}.kernel", data=random_kernel(rng, l)))
        if with_bias:
            entries.append(TensorEntry(
                name=f"{l.name}.bias", data=rng.standard_normal(l.out_channels) * 0.01))
    manifest = json.dumps({"arch": json.loads(arch_to_json(a))})
    return Container(entries=entries, manifest=manifest)
