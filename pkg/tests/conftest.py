"""Shared fixtures: the acceptance scene and cached full-pipeline runs."""

import time

import pytest

from sarcd import PipelineConfig, SceneSpec, generate_pair, run_pipeline


@pytest.fixture(scope="session")
def scene42():
    """Default 256x256 single-look scene, seed 42 (the benchmark scene)."""
    return generate_pair(SceneSpec(seed=42))


@pytest.fixture(scope="session")
def small_scene():
    """128x128 scene for quick end-to-end tests."""
    spec = SceneSpec(width=128, height=128, n_regions=2, region_radius=(5.0, 10.0), seed=7)
    return generate_pair(spec)


def _timed_run(i1, i2, cfg):
    start = time.perf_counter()
    result = run_pipeline(i1, i2, cfg)
    return result, time.perf_counter() - start


@pytest.fixture(scope="session")
def run_t9(scene42):
    """Benchmark run with defaults (T=9, b=0), plus its wall time."""
    i1, i2, _ = scene42
    return _timed_run(i1, i2, PipelineConfig())


@pytest.fixture(scope="session")
def run_t9_repeat(scene42):
    """Second identical benchmark run, for determinism checks."""
    i1, i2, _ = scene42
    return _timed_run(i1, i2, PipelineConfig())


@pytest.fixture(scope="session")
def run_t1(scene42):
    """Benchmark run with T=1, everything else at defaults."""
    i1, i2, _ = scene42
    return _timed_run(i1, i2, PipelineConfig(T=1))
