"""Command line pipeline: compress, analyze, verify, ev-grid, prune, bench.

Exit codes: 0 success, 1 validation failure (bad flags, malformed inputs,
out-of-range parameters), 2 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bench as bench_mod
from .container import (
    Container,
    ContainerError,
    TensorEntry,
    assemble_factors,
    factor_entries,
    read_container,
    write_container,
)
from .conv import conv3d_direct, conv3d_tucker, output_dims
from .cost import (
    ArchDesc,
    LayerDesc,
    analyze_arch,
    arch_from_json,
    eligible_for_decomposition,
)
from .prune import PruneSpec, prune_channels, pruned_channel_indices
from .rng import Xoshiro256StarStar
from .tucker import (
    ConvKernel,
    RankPolicy,
    ev_grid,
    ev_grid_csv,
    explained_variance,
    hooi_refine,
    hosvd_partial,
    select_ranks,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class CliError(Exception):
    """Validation failure surfaced as exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; the contract reserves 2 for I/O
    def error(self, message):
        raise CliError(message)


def _arch_from_manifest(c: Container) -> ArchDesc:
    doc = c.manifest_obj()
    if "arch" not in doc:
        raise CliError("container manifest carries no 'arch' description")
    return arch_from_json(json.dumps(doc["arch"]))


def _load_arch(path: str) -> ArchDesc:
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == b"TKWT":
        return _arch_from_manifest(read_container(path))
    with open(path, "r", encoding="utf-8") as fh:
        return arch_from_json(fh.read())


def _kernel_from_container(c: Container, l: LayerDesc) -> ConvKernel:
    entry = c.get(f"{l.name}.kernel")
    w = entry.data
    expect = (l.out_channels, l.in_channels, *l.kernel)
    if w.shape != expect:
        raise CliError(
            f"kernel of layer {l.name!r} has shape {w.shape}, manifest says {expect}"
        )
    return ConvKernel(weights=w, kind=l.kind)


def _policy(args) -> RankPolicy:
    try:
        return RankPolicy(df=args.df, min_rank=args.min_rank)
    except ValueError as e:
        raise CliError(str(e)) from None


def _add_eligibility_flags(p):
    p.add_argument("--include-pointwise", action="store_true",
                   help="also decompose 1x1x1 kernels")
    p.add_argument("--include-transposed", action="store_true",
                   help="also decompose transposed-convolution kernels "
                        "(decomposition and EV scoring only, never execution)")


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"expected a comma-separated integer list, got {text!r}") from None


def _verify_spatial(l: LayerDesc) -> tuple[int, int, int]:
    # small fixed extent, grown only if the kernel needs more room
    return tuple(max(8, k - 2 * p) for k, p in zip(l.kernel, l.spec.padding))


def cmd_compress(args) -> int:
    policy = _policy(args)
    src = read_container(args.input)
    arch = _arch_from_manifest(src)
    entries: list[TensorEntry] = []
    meta_layers = {}
    for l in arch.layers:
        kernel_name = f"{l.name}.kernel"
        if kernel_name not in src.names():
            raise CliError(f"container is missing tensor {kernel_name!r}")
        if eligible_for_decomposition(l, args.include_pointwise, args.include_transposed):
            k = _kernel_from_container(src, l)
            t_o, t_i = select_ranks(policy, l.out_channels, l.in_channels)
            f = hosvd_partial(k, t_o, t_i)
            if args.hooi:
                f = hooi_refine(k, f, max_iters=args.hooi_iters, tol=args.hooi_tol)
            ev = explained_variance(k, f)
            entries.extend(factor_entries(l.name, f))
            meta_layers[l.name] = {"t_o": t_o, "t_i": t_i, "ev": ev}
        else:
            entries.append(src.get(kernel_name))
        bias_name = f"{l.name}.bias"
        if bias_name in src.names():
            entries.append(src.get(bias_name))
    doc = src.manifest_obj()
    doc["tucker"] = {
        "df": policy.df,
        "min_rank": policy.min_rank,
        "method": "hooi" if args.hooi else "hosvd",
        "layers": meta_layers,
    }
    out = Container(entries=entries, manifest=json.dumps(doc))
    write_container(args.output, out)
    print(f"compressed {len(meta_layers)} of {len(arch.layers)} layers -> {args.output}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    policy = _policy(args)
    arch = _load_arch(args.input)
    report = analyze_arch(
        arch, policy,
        include_pointwise=args.include_pointwise,
        include_transposed=args.include_transposed,
    )
    if args.format == "json":
        text = report.to_json(double_flops=args.flops_double)
    else:
        text = report.to_table(double_flops=args.flops_double)
    _emit(text, args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    original = read_container(args.original)
    compressed = read_container(args.compressed)
    arch = _arch_from_manifest(original)
    meta = compressed.manifest_obj().get("tucker", {}).get("layers", {})
    if not meta:
        raise CliError("compressed container manifest lists no decomposed layers")
    rng = Xoshiro256StarStar(args.seed)
    rows = []
    worst = 0.0
    for l in arch.layers:
        if l.name not in meta:
            continue
        if l.kind == "convtranspose3d":
            continue  # decomposition-only layers are not executed
        k = _kernel_from_container(original, l)
        f = assemble_factors(compressed, l.name, kind=l.kind)
        spatial = _verify_spatial(l)
        x = rng.fill((l.in_channels, *spatial))
        ref = conv3d_direct(x, k, l.spec)
        got = conv3d_tucker(x, f, l.spec)
        denom = np.max(np.abs(ref))
        err = float(np.max(np.abs(got - ref)) / denom) if denom > 0 else 0.0
        worst = max(worst, err)
        rows.append({"layer": l.name, "t_o": f.t_o, "t_i": f.t_i, "max_rel_error": err})
    doc = {"seed": args.seed, "layers": rows, "max_rel_error": worst}
    if args.format == "json":
        _emit(json.dumps(doc, indent=2), args.output)
    else:
        lines = [f"{r['layer']}: ranks {r['t_o']}x{r['t_i']} max rel error {r['max_rel_error']:.3e}"
                 for r in rows]
        lines.append(f"overall max rel error {worst:.3e}")
        _emit("\n".join(lines), args.output)
    return EXIT_OK


def cmd_ev_grid(args) -> int:
    src = read_container(args.input)
    arch = _arch_from_manifest(src)
    layer = None
    if args.layer is not None:
        matches = [l for l in arch.layers if l.name == args.layer]
        if not matches:
            raise CliError(f"no layer named {args.layer!r} in the manifest")
        layer = matches[0]
    else:
        for l in arch.layers:
            if eligible_for_decomposition(l, include_transposed=True):
                layer = l
                break
        if layer is None:
            raise CliError("no decomposable layer in the container")
    k = _kernel_from_container(src, layer)
    t_o_list = _parse_int_list(args.grid_to) if args.grid_to else list(range(1, k.o + 1))
    t_i_list = _parse_int_list(args.grid_ti) if args.grid_ti else list(range(1, k.i + 1))
    try:
        grid = ev_grid(k, t_o_list, t_i_list)
    except ValueError as e:
        raise CliError(str(e)) from None
    _emit(ev_grid_csv(grid, t_o_list, t_i_list), args.output, newline=False)
    return EXIT_OK


def cmd_prune(args) -> int:
    try:
        spec = PruneSpec(fraction=args.fraction)
    except ValueError as e:
        raise CliError(str(e)) from None
    src = read_container(args.input)
    arch = _arch_from_manifest(src)
    entries = []
    pruned_meta = {}
    zeroed = 0
    total = 0
    for l in arch.layers:
        k = _kernel_from_container(src, l)
        idx = pruned_channel_indices(k, spec)
        pruned = prune_channels(k, spec)
        entries.append(TensorEntry(name=f"{l.name}.kernel", data=pruned.weights))
        pruned_meta[l.name] = idx
        per_channel = k.i * int(np.prod(k.spatial))
        zeroed += len(idx) * per_channel
        total += k.o * per_channel
        bias_name = f"{l.name}.bias"
        if bias_name in src.names():
            entries.append(src.get(bias_name))
    doc = src.manifest_obj()
    doc["pruned"] = {"fraction": spec.fraction, "layers": pruned_meta}
    write_container(args.output, Container(entries=entries, manifest=json.dumps(doc)))
    sparsity = zeroed / total if total else 0.0
    print(f"pruned container -> {args.output}; parameter sparsity {sparsity:.4f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    policy = _policy(args)
    src = read_container(args.input)
    arch = _arch_from_manifest(src)
    candidates = [l for l in arch.layers if eligible_for_decomposition(l)]
    if args.layer is not None:
        candidates = [l for l in arch.layers if l.name == args.layer]
        if not candidates:
            raise CliError(f"no layer named {args.layer!r} in the manifest")
    if not candidates:
        raise CliError("no benchable layer in the container")
    l = candidates[0]
    k = _kernel_from_container(src, l)
    t_o, t_i = select_ranks(policy, l.out_channels, l.in_channels)
    f = hosvd_partial(k, t_o, t_i)
    spatial = (args.spatial,) * 3 if args.spatial else l.input_dims
    output_dims(spatial, l.kernel, l.spec)  # validate geometry before timing
    rng = np.random.default_rng(args.seed)
    x = rng.standard_normal((l.in_channels, *spatial))
    threads = args.threads
    suffix = f"[threads={threads}]"
    with bench_mod.thread_limit(threads):
        base = bench_mod.time_forward(
            bench_mod.direct_forward(k, l.spec), x,
            runs=args.runs, warmup=args.warmup,
            label=f"{l.name}:direct{suffix}", df=policy.df,
        )
        cand = bench_mod.time_forward(
            bench_mod.tucker_forward(f, l.spec), x,
            runs=args.runs, warmup=args.warmup,
            label=f"{l.name}:tucker{suffix}", df=policy.df,
        )
    base = bench_mod.with_speedup(base, base)
    cand = bench_mod.with_speedup(base, cand)
    _emit(bench_mod.results_csv([base, cand]), args.output, newline=False)
    return EXIT_OK


def _emit(text: str, path: str | None, newline: bool = True):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text if not newline else text + "\n")
    else:
        sys.stdout.write(text if not newline else text + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tuckerforge", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common_policy(sp):
        sp.add_argument("--df", type=float, default=0.5,
                        help="downsampling factor in (0, 1] (default 0.5)")
        sp.add_argument("--min-rank", type=int, default=8,
                        help="rank floor, clamped to the channel count (default 8)")

    sp = sub.add_parser("compress", help="decompose eligible layers of a container")
    sp.add_argument("input")
    sp.add_argument("output")
    common_policy(sp)
    sp.add_argument("--hooi", action="store_true", help="refine HOSVD with HOOI sweeps")
    sp.add_argument("--hooi-iters", type=int, default=20)
    sp.add_argument("--hooi-tol", type=float, default=1e-6)
    _add_eligibility_flags(sp)
    sp.set_defaults(func=cmd_compress)

    sp = sub.add_parser("analyze", help="parameter/FLOP cost report for an architecture")
    sp.add_argument("input", help="architecture JSON or a container with an arch manifest")
    sp.add_argument("-o", "--output", default=None)
    common_policy(sp)
    sp.add_argument("--format", choices=("json", "table"), default="table")
    sp.add_argument("--flops-double", action="store_true",
                    help="count multiplies and adds separately (2x MACs)")
    _add_eligibility_flags(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("verify", help="compare direct vs factorized outputs on random inputs")
    sp.add_argument("original")
    sp.add_argument("compressed")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--format", choices=("json", "table"), default="table")
    sp.add_argument("-o", "--output", default=None)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("ev-grid", help="explained-variance grid over rank pairs")
    sp.add_argument("input")
    sp.add_argument("--layer", default=None)
    sp.add_argument("--grid-to", default=None, help="comma-separated output ranks")
    sp.add_argument("--grid-ti", default=None, help="comma-separated input ranks")
    sp.add_argument("-o", "--output", default=None)
    sp.set_defaults(func=cmd_ev_grid)

    sp = sub.add_parser("prune", help="zero the smallest-norm output channels")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--fraction", type=float, required=True)
    sp.set_defaults(func=cmd_prune)

    sp = sub.add_parser("bench", help="time direct vs factorized forward passes")
    sp.add_argument("input")
    common_policy(sp)
    sp.add_argument("--layer", default=None)
    sp.add_argument("--runs", type=int, default=10)
    sp.add_argument("--warmup", type=int, default=3)
    sp.add_argument("--threads", type=int,
                    default=int(os.environ.get("TUCKERFORGE_THREADS", "1")),
                    help="BLAS threads for the conv path (default 1, "
                         "env TUCKERFORGE_THREADS overrides)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--spatial", type=int, default=None,
                    help="override the cubic input extent from the manifest")
    sp.add_argument("-o", "--output", default=None)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ContainerError, ValueError, KeyError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
