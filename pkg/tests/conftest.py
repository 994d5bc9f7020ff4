import numpy as np
import pytest

from heavybo.datagen import Dataset, MeanSpec, MixtureConfig, generate_dataset


@pytest.fixture
def small_config():
    return MixtureConfig(p=40, n=12, shape=1.0, mean=MeanSpec.dense(), noise_rate=0.1, seed=7)


@pytest.fixture
def small_dataset(small_config):
    return generate_dataset(small_config)


def zero_cluster(rng, p):
    return np.zeros(p)


def make_dataset(points, labels, clean=None, mu=None):
    return Dataset.from_arrays(np.asarray(points, dtype=float), labels, clean, mu)


_ACCEPTANCE = []


@pytest.fixture
def verdict(capsys):
    """Record a PASS/FAIL line for an acceptance criterion and echo it."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append((number, line))
        with capsys.disabled():
            print(f"\n    {line}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
