import numpy as np
import pytest

from cfm import Attribute, Dataset, Schema


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: opt-in large-scale checks")


def pytest_runtest_logreport(report):
    """One PASS/FAIL line per acceptance criterion."""
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        print(f"\n[acceptance] {status} {name}")
    elif report.when == "setup" and report.skipped:
        print(f"\n[acceptance] SKIP {name}")


def numeric_schema(n_features: int, n_classes: int = 2) -> Schema:
    attrs = tuple(Attribute(f"x{i}") for i in range(n_features))
    labels = tuple(f"c{m}" for m in range(n_classes))
    return Schema(attrs, "class", labels)


def make_blobs(n: int, n_features: int, n_classes: int, seed: int,
               spread: float = 2.0) -> Dataset:
    """Gaussian blobs around well-separated sign-pattern centers."""
    rng = np.random.default_rng(seed)
    centers = np.empty((n_classes, n_features))
    for m in range(n_classes):
        signs = np.array([1.0 if (m >> (i % 8)) & 1 or (i + m) % 3 == 0 else -1.0
                          for i in range(n_features)])
        centers[m] = spread * signs * (1.0 + 0.25 * m)
    labels = rng.integers(0, n_classes, size=n)
    values = centers[labels] + rng.normal(0.0, 1.0, size=(n, n_features))
    return Dataset(numeric_schema(n_features, n_classes), values, labels)


@pytest.fixture(scope="session")
def blob_dataset() -> Dataset:
    """The synthetic acceptance dataset: 10,000 rows, 8 numeric features, 3 classes."""
    return make_blobs(10000, 8, 3, seed=20260808)


@pytest.fixture(scope="session")
def small_blobs() -> Dataset:
    return make_blobs(200, 4, 2, seed=7)
