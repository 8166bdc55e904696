"""Analytic parameter and FLOP accounting for direct vs. Tucker layers.

One FLOP unit is one multiply-accumulate (MAC). Renderers accept a
``double_flops`` switch for conventions that count multiplies and adds
separately. Counts are exact integers and match the instrumented multiply
tallies of the execution paths.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .conv import ConvSpec, output_dims, transposed_output_dims
from .tucker import RankPolicy, select_ranks

__all__ = [
    "LayerDesc",
    "ArchDesc",
    "LayerCost",
    "CostReport",
    "params_direct",
    "params_tucker",
    "flops_direct",
    "flops_tucker",
    "compression_ratio",
    "eligible_for_decomposition",
    "analyze_arch",
    "arch_from_json",
    "arch_to_json",
]

LAYER_KINDS = ("conv3d", "convtranspose3d", "pointwise")


@dataclass(frozen=True)
class LayerDesc:
    """Declarative description of one convolution layer."""

    name: str
    kind: str
    in_channels: int
    out_channels: int
    kernel: tuple[int, int, int]
    spec: ConvSpec = ConvSpec()
    input_dims: tuple[int, int, int] = (1, 1, 1)

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        kernel = tuple(int(v) for v in self.kernel)
        input_dims = tuple(int(v) for v in self.input_dims)
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError(f"layer {self.name}: channel counts must be positive")
        if len(kernel) != 3 or any(v < 1 for v in kernel):
            raise ValueError(f"layer {self.name}: kernel extents must be positive")
        if len(input_dims) != 3 or any(v < 1 for v in input_dims):
            raise ValueError(f"layer {self.name}: input dims must be positive")
        if self.kind == "pointwise" and kernel != (1, 1, 1):
            raise ValueError(f"layer {self.name}: pointwise layers must have a 1x1x1 kernel")
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "input_dims", input_dims)
        self.out_dims()  # geometry must be valid

    def out_dims(self) -> tuple[int, int, int]:
        if self.kind == "convtranspose3d":
            return transposed_output_dims(self.input_dims, self.kernel, self.spec)
        return output_dims(self.input_dims, self.kernel, self.spec)

    def kernel_volume(self) -> int:
        return math.prod(self.kernel)


@dataclass(frozen=True)
class ArchDesc:
    """Ordered layer list making up one network, for cost analysis."""

    layers: tuple[LayerDesc, ...]
    model: str = "arch"

    def __post_init__(self):
        layers = tuple(self.layers)
        names = [l.name for l in layers]
        if len(set(names)) != len(names):
            raise ValueError("layer names must be unique")
        object.__setattr__(self, "layers", layers)


def params_direct(l: LayerDesc) -> int:
    """O*I*K_H*K_W*K_D weight parameters (bias excluded)."""
    return l.out_channels * l.in_channels * l.kernel_volume()


def params_tucker(l: LayerDesc, t_o: int, t_i: int) -> int:
    """T_I*I + T_O*T_I*K^3 + O*T_O parameters of the three-stage layer."""
    return (
        t_i * l.in_channels
        + t_o * t_i * l.kernel_volume()
        + l.out_channels * t_o
    )


def _spatial_sides(l: LayerDesc) -> tuple[int, int]:
    """(input voxels, output voxels); transposed layers use the larger
    (upsampled) side as the convolution extent, which is approximate."""
    in_vox = math.prod(l.input_dims)
    out_vox = math.prod(l.out_dims())
    return in_vox, out_vox


def flops_direct(l: LayerDesc) -> int:
    """O*I*K^3*H'*W'*D' multiply-accumulates."""
    _, out_vox = _spatial_sides(l)
    return l.out_channels * l.in_channels * l.kernel_volume() * out_vox


def flops_tucker(l: LayerDesc, t_o: int, t_i: int) -> int:
    """T_I*I*HWD + T_O*T_I*K^3*H'W'D' + O*T_O*H'W'D' multiply-accumulates."""
    in_vox, out_vox = _spatial_sides(l)
    return (
        t_i * l.in_channels * in_vox
        + t_o * t_i * l.kernel_volume() * out_vox
        + l.out_channels * t_o * out_vox
    )


def compression_ratio(p_orig: int, p_comp: int) -> float:
    """Original over compressed parameter count."""
    if p_comp <= 0:
        raise ValueError("compressed parameter count must be positive")
    return p_orig / p_comp


def eligible_for_decomposition(
    l: LayerDesc,
    include_pointwise: bool = False,
    include_transposed: bool = False,
) -> bool:
    """Default policy: forward convolutions with a spatial kernel."""
    if l.kind == "convtranspose3d":
        return include_transposed
    if l.kind == "pointwise" or l.kernel_volume() == 1:
        return include_pointwise
    return True


@dataclass(frozen=True)
class LayerCost:
    name: str
    kind: str
    decomposed: bool
    t_o: int | None
    t_i: int | None
    params_original: int
    params_compressed: int
    flops_original: int
    flops_compressed: int
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class CostReport:
    """Per-layer and aggregate parameter/FLOP accounting."""

    model: str
    df: float
    min_rank: int
    layers: tuple[LayerCost, ...]

    @property
    def params_original(self) -> int:
        return sum(l.params_original for l in self.layers)

    @property
    def params_compressed(self) -> int:
        return sum(l.params_compressed for l in self.layers)

    @property
    def flops_original(self) -> int:
        return sum(l.flops_original for l in self.layers)

    @property
    def flops_compressed(self) -> int:
        return sum(l.flops_compressed for l in self.layers)

    @property
    def params_delta_pct(self) -> float:
        return 100.0 * (1.0 - self.params_compressed / self.params_original)

    @property
    def flops_delta_pct(self) -> float:
        return 100.0 * (1.0 - self.flops_compressed / self.flops_original)

    @property
    def cr(self) -> float:
        return compression_ratio(self.params_original, self.params_compressed)

    def to_dict(self, double_flops: bool = False) -> dict:
        mul = 2 if double_flops else 1

        def layer_entry(l: LayerCost) -> dict:
            return {
                "name": l.name,
                "kind": l.kind,
                "decomposed": l.decomposed,
                "t_o": l.t_o,
                "t_i": l.t_i,
                "params_original": l.params_original,
                "params_compressed": l.params_compressed,
                "params_delta_pct": 100.0 * (1.0 - l.params_compressed / l.params_original),
                "flops_original": mul * l.flops_original,
                "flops_compressed": mul * l.flops_compressed,
                "flops_delta_pct": 100.0 * (1.0 - l.flops_compressed / l.flops_original),
                "compression_ratio": compression_ratio(l.params_original, l.params_compressed),
                "flags": list(l.flags),
            }

        return {
            "model": self.model,
            "df": self.df,
            "min_rank": self.min_rank,
            "flop_unit": "mul+add" if double_flops else "mac",
            "layers": [layer_entry(l) for l in self.layers],
            "totals": {
                "params_original": self.params_original,
                "params_compressed": self.params_compressed,
                "params_delta_pct": self.params_delta_pct,
                "flops_original": mul * self.flops_original,
                "flops_compressed": mul * self.flops_compressed,
                "flops_delta_pct": self.flops_delta_pct,
                "compression_ratio": self.cr,
            },
        }

    def to_json(self, double_flops: bool = False) -> str:
        return json.dumps(self.to_dict(double_flops=double_flops), indent=2)

    def to_table(self, double_flops: bool = False) -> str:
        """Aligned text table: M-param and G-FLOPs before/after with deltas."""
        mul = 2 if double_flops else 1
        header = (
            "layer", "kind", "ranks", "M-param", "M-param'",
            "dP%", "CR", "G-FLOPs", "G-FLOPs'", "dF%", "flags",
        )
        rows = [header]
        for l in self.layers:
            ranks = f"{l.t_o}x{l.t_i}" if l.decomposed else "-"
            rows.append((
                l.name,
                l.kind,
                ranks,
                f"{l.params_original / 1e6:.4f}",
                f"{l.params_compressed / 1e6:.4f}",
                f"{100.0 * (1.0 - l.params_compressed / l.params_original):.2f}",
                f"{compression_ratio(l.params_original, l.params_compressed):.2f}",
                f"{mul * l.flops_original / 1e9:.4f}",
                f"{mul * l.flops_compressed / 1e9:.4f}",
                f"{100.0 * (1.0 - l.flops_compressed / l.flops_original):.2f}",
                ",".join(l.flags) or "-",
            ))
        rows.append((
            "TOTAL",
            "",
            "",
            f"{self.params_original / 1e6:.4f}",
            f"{self.params_compressed / 1e6:.4f}",
            f"{self.params_delta_pct:.2f}",
            f"{self.cr:.2f}",
            f"{mul * self.flops_original / 1e9:.4f}",
            f"{mul * self.flops_compressed / 1e9:.4f}",
            f"{self.flops_delta_pct:.2f}",
            "",
        ))
        widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
        lines = []
        for idx, r in enumerate(rows):
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
            if idx == 0 or idx == len(rows) - 2:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def analyze_arch(
    a: ArchDesc,
    policy: RankPolicy,
    include_pointwise: bool = False,
    include_transposed: bool = False,
) -> CostReport:
    """Apply the rank policy to every eligible layer and tally the costs.

    Ineligible layers keep their original cost on both sides, so aggregate
    deltas reflect what swapping only the eligible layers would achieve.
    """
    entries = []
    for l in a.layers:
        p_orig = params_direct(l)
        f_orig = flops_direct(l)
        flags = []
        if l.kind == "convtranspose3d":
            flags.append("transposed-flops-approx")
        if l.kernel_volume() == 1:
            flags.append("pointwise")
        if eligible_for_decomposition(l, include_pointwise, include_transposed):
            t_o, t_i = select_ranks(policy, l.out_channels, l.in_channels)
            entries.append(LayerCost(
                name=l.name,
                kind=l.kind,
                decomposed=True,
                t_o=t_o,
                t_i=t_i,
                params_original=p_orig,
                params_compressed=params_tucker(l, t_o, t_i),
                flops_original=f_orig,
                flops_compressed=flops_tucker(l, t_o, t_i),
                flags=tuple(flags),
            ))
        else:
            entries.append(LayerCost(
                name=l.name,
                kind=l.kind,
                decomposed=False,
                t_o=None,
                t_i=None,
                params_original=p_orig,
                params_compressed=p_orig,
                flops_original=f_orig,
                flops_compressed=f_orig,
                flags=tuple(flags),
            ))
    return CostReport(model=a.model, df=policy.df, min_rank=policy.min_rank, layers=tuple(entries))


def _layer_from_obj(obj: dict) -> LayerDesc:
    try:
        return LayerDesc(
            name=obj["name"],
            kind=obj["kind"],
            in_channels=int(obj["in_channels"]),
            out_channels=int(obj["out_channels"]),
            kernel=tuple(obj["kernel"]),
            spec=ConvSpec(tuple(obj["stride"]), tuple(obj["padding"])),
            input_dims=tuple(obj["input_dims"]),
        )
    except KeyError as e:
        raise ValueError(f"layer object missing key {e.args[0]!r}") from None


def arch_from_json(text: str) -> ArchDesc:
    """Parse an architecture file: {"model": str, "layers": [layer, ...]}.

    A bare JSON array of layer objects is accepted too. Layer keys: name,
    kind, in_channels, out_channels, kernel, stride, padding, input_dims.
    """
    doc = json.loads(text)
    if isinstance(doc, list):
        model, layer_objs = "arch", doc
    elif isinstance(doc, dict):
        model = doc.get("model", "arch")
        layer_objs = doc.get("layers")
        if layer_objs is None:
            raise ValueError("architecture object missing 'layers'")
    else:
        raise ValueError("architecture file must be a JSON object or array")
    return ArchDesc(layers=tuple(_layer_from_obj(o) for o in layer_objs), model=model)


def arch_to_json(a: ArchDesc) -> str:
    return json.dumps({
        "model": a.model,
        "layers": [
            {
                "name": l.name,
                "kind": l.kind,
                "in_channels": l.in_channels,
                "out_channels": l.out_channels,
                "kernel": list(l.kernel),
                "stride": list(l.spec.stride),
                "padding": list(l.spec.padding),
                "input_dims": list(l.input_dims),
            }
            for l in a.layers
        ],
    }, indent=2)
