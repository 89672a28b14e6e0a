import numpy as np
import pytest

from tactile_grasp.dataset import Dataset, load_dataset, write_dataset
from tactile_grasp.simulator import (
    DEFAULT_BENCHMARK_SEED,
    benchmark_meta,
    generate_benchmark,
    generate_sweep,
)


@pytest.fixture(scope="session")
def benchmark_recordings():
    return generate_benchmark(DEFAULT_BENCHMARK_SEED)


@pytest.fixture(scope="session")
def benchmark_path(tmp_path_factory, benchmark_recordings):
    path = tmp_path_factory.mktemp("data") / "benchmark.tgd"
    write_dataset(benchmark_recordings, path, meta=benchmark_meta(DEFAULT_BENCHMARK_SEED))
    return path


@pytest.fixture(scope="session")
def benchmark_dataset(benchmark_path) -> Dataset:
    return load_dataset(benchmark_path)


@pytest.fixture(scope="session")
def sweep_recordings():
    return generate_sweep(seed=7, per_class=10, noise_sd=0.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
