"""Wall-clock comparison of direct vs. factorized forward passes.

Timed regions cover only the forward computation: inputs and weights are
materialized before the first warmup pass, and container I/O never happens
inside the harness. Times come from the monotonic high-resolution clock;
runs are reported as mean and sample standard deviation, no trimming.
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .conv import ConvSpec, conv3d_direct, conv3d_tucker
from .tucker import ConvKernel, TuckerFactors

__all__ = [
    "BenchResult",
    "time_forward",
    "speedup",
    "direct_forward",
    "tucker_forward",
    "results_csv",
    "thread_limit",
]


@dataclass(frozen=True)
class BenchResult:
    label: str
    runs: int
    mean_ms: float
    std_ms: float
    speedup: float = float("nan")
    df: float | None = None

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.std_ms < 0:
            raise ValueError("std must be nonnegative")


def direct_forward(k: ConvKernel, spec: ConvSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Forward pass closure for the original layer (blocked GEMM path)."""
    return lambda x: conv3d_direct(x, k, spec, blocked=True)


def tucker_forward(f: TuckerFactors, spec: ConvSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Forward pass closure for the factorized layer (blocked GEMM path)."""
    return lambda x: conv3d_tucker(x, f, spec, blocked=True)


def time_forward(
    forward: Callable[[np.ndarray], np.ndarray] | Sequence[Callable],
    x: np.ndarray,
    runs: int = 10,
    warmup: int = 3,
    label: str = "forward",
    df: float | None = None,
) -> BenchResult:
    """Run ``warmup`` untimed passes, then ``runs`` timed ones.

    ``forward`` may be a single callable or a sequence applied as a chain.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    stages = list(forward) if isinstance(forward, Sequence) else [forward]

    def run_once(inp):
        out = inp
        for stage in stages:
            out = stage(out)
        return out

    for _ in range(warmup):
        run_once(x)
    samples = []
    for _ in range(runs):
        t0 = time.perf_counter()
        run_once(x)
        samples.append((time.perf_counter() - t0) * 1e3)
    mean = statistics.fmean(samples)
    std = statistics.stdev(samples) if runs > 1 else 0.0
    return BenchResult(label=label, runs=runs, mean_ms=mean, std_ms=std, df=df)


def speedup(baseline: BenchResult, candidate: BenchResult) -> float:
    """Baseline mean over candidate mean; > 1 means the candidate is faster."""
    if candidate.mean_ms <= 0:
        raise ValueError("candidate mean must be positive")
    return baseline.mean_ms / candidate.mean_ms


def with_speedup(baseline: BenchResult, candidate: BenchResult) -> BenchResult:
    return BenchResult(
        label=candidate.label,
        runs=candidate.runs,
        mean_ms=candidate.mean_ms,
        std_ms=candidate.std_ms,
        speedup=speedup(baseline, candidate),
        df=candidate.df,
    )


def results_csv(results: Sequence[BenchResult]) -> str:
    """Fixed column order: label, df, runs, mean_ms, std_ms, speedup."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label", "df", "runs", "mean_ms", "std_ms", "speedup"])
    for r in results:
        writer.writerow([
            r.label,
            "" if r.df is None else format(r.df, "g"),
            r.runs,
            format(r.mean_ms, ".6f"),
            format(r.std_ms, ".6f"),
            "" if r.speedup != r.speedup else format(r.speedup, ".6f"),
        ])
    return buf.getvalue()


@contextmanager
def thread_limit(n: int | None):
    """Cap BLAS threads inside the context; single-threaded runs are the
    stable default, more threads opt in via the CLI flag."""
    if n is None:
        yield
        return
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        yield
        return
    with threadpool_limits(limits=n):
        yield
