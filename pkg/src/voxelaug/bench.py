"""Throughput measurement for augmentation pipelines.

Two modes: ``pipeline`` times full passes (gates drawn as configured, so the
mix of applied transforms matches training), while ``per-transform`` times
every configured transform in isolation against the same base patch each
iteration.  Warmup passes run first and are excluded — they absorb one-time
costs such as JIT compilation — and the accounting keeps the invariant
``total_ms >= sum(per_transform_ms) * iterations`` so the reported overhead
is never negative.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

from . import kernels
from .pipeline import REGISTRY, PipelineConfig, apply_pipeline, transform_stream, TraceEvent
from .synth import make_synthetic_sample
from .volume import Sample

_MODES = ("pipeline", "per-transform")

# Patches consumed per training epoch (iterations × batch size) used for the
# epoch-time projection reported alongside raw throughput.
EPOCH_PATCHES = 250 * 2


@dataclass(frozen=True)
class BenchReport:
    """Aggregated timing for one benchmark run."""

    config_name: str
    patch_dims: tuple[int, int, int]
    mode: str
    workers: int
    iterations: int
    total_ms: float
    ms_per_patch: float
    patches_per_s: float
    per_transform_ms: Mapping[str, float]
    overhead_ms: float

    @property
    def epoch_seconds(self) -> float:
        """Projected wall time for one training epoch of EPOCH_PATCHES patches."""
        return self.ms_per_patch * EPOCH_PATCHES / (1000.0 * max(1, self.workers))

    def to_dict(self) -> dict:
        return {
            "config_name": self.config_name,
            "patch_dims": list(self.patch_dims),
            "mode": self.mode,
            "workers": self.workers,
            "iterations": self.iterations,
            "total_ms": self.total_ms,
            "ms_per_patch": self.ms_per_patch,
            "patches_per_s": self.patches_per_s,
            "per_transform_ms": dict(self.per_transform_ms),
            "overhead_ms": self.overhead_ms,
            "epoch_seconds": self.epoch_seconds,
        }

    def format_table(self) -> str:
        lines = [
            f"config          : {self.config_name}",
            f"patch dims      : {self.patch_dims[0]}x{self.patch_dims[1]}x{self.patch_dims[2]}",
            f"mode            : {self.mode}",
            f"workers         : {self.workers}",
            f"iterations      : {self.iterations}",
            f"total compute   : {self.total_ms:.1f} ms",
            f"per patch       : {self.ms_per_patch:.2f} ms",
            f"throughput      : {self.patches_per_s:.2f} patches/s",
            f"overhead        : {self.overhead_ms:.2f} ms/patch",
        ]
        if self.per_transform_ms:
            lines.append("mean ms per transform (per patch):")
            width = max(len(name) for name in self.per_transform_ms)
            for name, ms in self.per_transform_ms.items():
                lines.append(f"  {name:<{width}}  {ms:8.2f}")
        lines.append(
            f"estimated epoch time ({EPOCH_PATCHES} patches): {self.epoch_seconds:.1f} s"
        )
        return "\n".join(lines)


def _run_pipeline_iters(
    base: Sample, cfg: PipelineConfig, ids: range, timed: bool, sums: dict[str, float]
) -> float:
    total = 0.0
    for sample_id in ids:
        trace: list[TraceEvent] = []
        t0 = time.perf_counter()
        apply_pipeline(base, cfg, sample_id=sample_id, epoch=0, trace=trace)
        dt = (time.perf_counter() - t0) * 1000.0
        if timed:
            total += dt
            for ev in trace:
                sums[ev.name] = sums.get(ev.name, 0.0) + ev.ms
    return total


def _run_isolated_iters(
    base: Sample, cfg: PipelineConfig, ids: range, timed: bool, sums: dict[str, float]
) -> float:
    total = 0.0
    for sample_id in ids:
        for position, spec in enumerate(cfg.specs):
            rng = transform_stream(cfg, sample_id=sample_id, epoch=0, position=position)
            t0 = time.perf_counter()
            REGISTRY[spec.name].apply(base, rng, spec.params)
            dt = (time.perf_counter() - t0) * 1000.0
            if timed:
                total += dt
                sums[spec.name] = sums.get(spec.name, 0.0) + dt
    return total


def run_benchmark(
    cfg: PipelineConfig,
    patch_dims: tuple[int, int, int] = (128, 128, 128),
    iterations: int = 20,
    warmup: int = 5,
    mode: str = "pipeline",
    workers: int = 1,
    config_name: str = "pipeline",
) -> BenchReport:
    """Time ``cfg`` on synthetic patches and return the aggregated report.

    ``workers`` threads split the iterations; the VOXELAUG_THREADS environment
    variable, when set, caps the effective worker count.
    """
    patch_dims = tuple(int(n) for n in patch_dims)
    if len(patch_dims) != 3 or any(n < 1 for n in patch_dims):
        raise ValueError(f"patch_dims must be three positive integers, got {patch_dims!r}")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    env_cap = os.environ.get("VOXELAUG_THREADS")
    if env_cap is not None:
        workers = max(1, min(workers, int(env_cap)))

    kernels.prime()
    base = make_synthetic_sample(patch_dims, seed=0)
    runner = _run_pipeline_iters if mode == "pipeline" else _run_isolated_iters

    # Warmup (FFT plan caches, allocator steady state).
    warm_sums: dict[str, float] = {}
    runner(base, cfg, range(iterations, iterations + warmup), False, warm_sums)

    counts = [iterations // workers] * workers
    for i in range(iterations % workers):
        counts[i] += 1
    starts = [sum(counts[:i]) for i in range(workers)]
    jobs = [
        (range(starts[i], starts[i] + counts[i]),) for i in range(workers) if counts[i] > 0
    ]

    sums_per_worker: list[dict[str, float]] = [{} for _ in jobs]
    totals: list[float] = [0.0] * len(jobs)

    wall_t0 = time.perf_counter()
    if len(jobs) == 1:
        totals[0] = runner(base, cfg, jobs[0][0], True, sums_per_worker[0])
    else:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            futures = [
                pool.submit(runner, base, cfg, jobs[i][0], True, sums_per_worker[i])
                for i in range(len(jobs))
            ]
            for i, fut in enumerate(futures):
                totals[i] = fut.result()
    wall_ms = (time.perf_counter() - wall_t0) * 1000.0

    total_ms = sum(totals)
    merged: dict[str, float] = {}
    for spec in cfg.specs:
        acc = sum(s.get(spec.name, 0.0) for s in sums_per_worker)
        merged[spec.name] = acc / iterations
    ms_per_patch = total_ms / iterations
    overhead = max(0.0, ms_per_patch - sum(merged.values()))
    patches_per_s = 1000.0 * iterations / wall_ms if wall_ms > 0 else float("inf")

    return BenchReport(
        config_name=config_name,
        patch_dims=patch_dims,
        mode=mode,
        workers=len(jobs),
        iterations=iterations,
        total_ms=total_ms,
        ms_per_patch=ms_per_patch,
        patches_per_s=patches_per_s,
        per_transform_ms=merged,
        overhead_ms=overhead,
    )
