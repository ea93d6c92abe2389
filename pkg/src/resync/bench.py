"""Benchmark harness for the correlation kernels.

Times the aligned-case early exit (offset already zero, one candidate
evaluated) against the worst case (nothing qualifies, the full window is
swept), for each available backend.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .pattern import Pattern, generate_pattern
from .recovery import DetectionSet, RecoveryParams, RecoveryStatus, find_offset


@dataclass(frozen=True)
class BenchCase:
    """Shared inputs: one pattern, one aligned stream, one noise stream."""

    pattern: Pattern
    aligned: DetectionSet
    noise: DetectionSet
    params: RecoveryParams


def make_bench_case(
    pattern_bins: int,
    nd: int,
    delta_max: int,
    tau_ps: int = 800,
    threshold_t: float = 0.5,
    seed: int = 7,
) -> BenchCase:
    """Build a deterministic benchmark case.

    The aligned stream samples nd pulse positions inside the margins with
    timestamps at bin centers, so recovery accepts at offset zero after a
    single candidate.  The noise stream is uniform over the margin-safe
    bins and (at any realistic threshold) forces the full sweep.
    """
    pattern = generate_pattern(seed, pattern_bins)
    params = RecoveryParams(
        tau_ps=tau_ps, threshold_t=threshold_t, delta_max=delta_max, nd_max=nd
    )
    lo, hi = delta_max, pattern_bins - delta_max
    if hi - lo < 4 * nd:
        raise ValueError("margins leave too few bins for the requested case")
    rng = np.random.default_rng(seed)

    pulses = pattern.pulse_positions()
    inside = pulses[(pulses >= lo) & (pulses < hi)]
    pick = np.sort(rng.choice(inside.size, size=nd, replace=False))
    aligned_ts = inside[pick] * tau_ps + tau_ps // 2
    aligned = DetectionSet(aligned_ts)

    noise_bins = np.sort(rng.integers(lo, hi, size=nd, dtype=np.int64))
    noise = DetectionSet(noise_bins * tau_ps + tau_ps // 2)
    return BenchCase(pattern=pattern, aligned=aligned, noise=noise, params=params)


def _time_us(fn, reps: int) -> tuple[float, float]:
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        fn()
        samples.append((time.perf_counter_ns() - t0) / 1e3)
    arr = np.asarray(samples)
    return float(np.median(arr)), float(np.percentile(arr, 95))


@dataclass(frozen=True)
class BenchResult:
    """Timing for one backend on one case, microseconds."""

    backend: str
    aligned_median_us: float
    aligned_p95_us: float
    sweep_median_us: float
    sweep_p95_us: float

    @property
    def ratio(self) -> float:
        return self.sweep_median_us / self.aligned_median_us


def run_bench(case: BenchCase, backend: str, reps: int = 50, sweep_reps: int = 3) -> BenchResult:
    """Time the aligned case and the full-sweep case on one backend."""
    previous = kernels.active_name()
    kernels.use(backend)
    try:
        out = find_offset(case.pattern, case.aligned, case.params)
        if out.status is not RecoveryStatus.ACCEPTED or out.delta_bins != 0:
            raise RuntimeError("benchmark aligned case did not accept at offset zero")
        out = find_offset(case.pattern, case.noise, case.params)
        if out.tested_count != 2 * case.params.delta_max + 1:
            raise RuntimeError("benchmark noise case did not sweep the full window")

        med_a, p95_a = _time_us(
            lambda: find_offset(case.pattern, case.aligned, case.params), reps
        )
        med_s, p95_s = _time_us(
            lambda: find_offset(case.pattern, case.noise, case.params), max(1, sweep_reps)
        )
    finally:
        kernels.use(previous)
    return BenchResult(
        backend=backend,
        aligned_median_us=med_a,
        aligned_p95_us=p95_a,
        sweep_median_us=med_s,
        sweep_p95_us=p95_s,
    )


def compare_backends(case: BenchCase, reps: int = 50, sweep_reps: int = 3) -> list[BenchResult]:
    """Run the benchmark on every available backend."""
    return [
        run_bench(case, name, reps=reps, sweep_reps=sweep_reps)
        for name in kernels.available_backends()
    ]
