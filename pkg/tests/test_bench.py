import time

import numpy as np
import pytest

from tuckerforge.bench import (
    BenchResult,
    direct_forward,
    results_csv,
    speedup,
    time_forward,
    tucker_forward,
    with_speedup,
)
from tuckerforge.conv import ConvSpec, conv3d_direct
from tuckerforge.tucker import ConvKernel, hosvd_partial


def sleeper(seconds):
    def fn(x):
        time.sleep(seconds)
        return x
    return fn


class TestTimeForward:
    def test_single_run_has_zero_std(self):
        r = time_forward(sleeper(0.001), np.zeros(1), runs=1, warmup=0)
        assert r.runs == 1 and r.std_ms == 0.0

    def test_mean_tracks_workload(self):
        r = time_forward(sleeper(0.01), np.zeros(1), runs=3, warmup=1)
        assert 5.0 <= r.mean_ms <= 100.0

    def test_identical_workloads_speedup_near_one(self):
        a = time_forward(sleeper(0.005), np.zeros(1), runs=5, warmup=1)
        b = time_forward(sleeper(0.005), np.zeros(1), runs=5, warmup=1)
        assert 0.5 <= speedup(a, b) <= 2.0

    def test_stage_chain(self):
        calls = []
        stages = [lambda x: calls.append(1) or x + 1, lambda x: calls.append(2) or x * 2]
        r = time_forward(stages, np.array([1.0]), runs=2, warmup=0)
        assert r.runs == 2
        assert calls == [1, 2, 1, 2]

    def test_setup_cost_outside_timed_region(self, tmp_path):
        # repeating expensive I/O before the harness must not move the mean
        payload = np.random.default_rng(0).standard_normal(2 ** 16)

        def measure(io_repeats):
            for rep in range(io_repeats):
                p = tmp_path / f"io{rep}.npy"
                np.save(p, payload)
                np.load(p)
            return time_forward(sleeper(0.004), np.zeros(1), runs=5, warmup=1)

        lean = measure(1)
        heavy = measure(20)
        assert 0.5 <= lean.mean_ms / heavy.mean_ms <= 2.0

    def test_validation(self):
        with pytest.raises(ValueError):
            time_forward(sleeper(0), np.zeros(1), runs=0)
        with pytest.raises(ValueError):
            time_forward(sleeper(0), np.zeros(1), runs=1, warmup=-1)
        with pytest.raises(ValueError):
            BenchResult(label="x", runs=1, mean_ms=1.0, std_ms=-0.1)


class TestSpeedup:
    def test_equal_means(self):
        a = BenchResult("a", 2, 100.0, 1.0)
        assert speedup(a, a) == 1.0

    def test_two_to_one(self):
        base = BenchResult("base", 2, 200.0, 1.0)
        cand = BenchResult("cand", 2, 100.0, 1.0)
        assert speedup(base, cand) == 2.0

    def test_slower_candidate_below_one(self):
        base = BenchResult("base", 2, 100.0, 1.0)
        cand = BenchResult("cand", 2, 400.0, 1.0)
        assert speedup(base, cand) == 0.25

    def test_zero_mean_rejected(self):
        base = BenchResult("base", 1, 1.0, 0.0)
        with pytest.raises(ValueError):
            speedup(base, BenchResult("c", 1, 0.0, 0.0))


class TestCsv:
    def test_fixed_columns(self):
        base = BenchResult("layer:direct", 10, 8.0, 0.5, df=0.5)
        cand = with_speedup(base, BenchResult("layer:tucker", 10, 4.0, 0.25, df=0.5))
        text = results_csv([with_speedup(base, base), cand])
        lines = text.strip().split("\n")
        assert lines[0] == "label,df,runs,mean_ms,std_ms,speedup"
        cells = lines[2].split(",")
        assert cells[0] == "layer:tucker"
        assert float(cells[1]) == 0.5
        assert int(cells[2]) == 10
        assert float(cells[5]) == 2.0

    def test_missing_fields_blank(self):
        text = results_csv([BenchResult("x", 1, 1.0, 0.0)])
        assert text.strip().split("\n")[1] == "x,,1,1.000000,0.000000,"


class TestForwardBuilders:
    def test_direct_and_tucker_runners(self):
        rng = np.random.default_rng(0)
        k = ConvKernel(rng.standard_normal((4, 4, 3, 3, 3)))
        f = hosvd_partial(k, 2, 2)
        spec = ConvSpec((1, 1, 1), (1, 1, 1))
        x = rng.standard_normal((4, 5, 5, 5))
        ref = conv3d_direct(x, k, spec, blocked=True)
        assert np.allclose(direct_forward(k, spec)(x), ref)
        out = tucker_forward(f, spec)(x)
        assert out.shape == ref.shape
