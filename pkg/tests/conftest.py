"""
Shared fixtures for the hardyops tests.
Run with: pytest tests/ -v
"""

import os
import sys
from pathlib import Path

# no file log during tests; must be set before the modules create their loggers
os.environ["HARDYOPS_LOG_DIR"] = ""
os.environ.setdefault("HARDYOPS_LOG_LEVEL", "WARNING")
os.environ.setdefault("HARDYOPS_THREADS", "1")

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

import pytest  # noqa: E402

import halfline  # noqa: E402
import semigroup  # noqa: E402
from coupling import ModelParams  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: decompositions with n >= 1000")


def build_decomp(alpha, lam, n, x_max, graded=False):
    grading = halfline.Grading.boundary_layer(x_max) if graded else None
    grid = halfline.make_grid(n, x_max, grading)
    return semigroup.decompose(halfline.assemble_L(grid, ModelParams.from_lambda(alpha, lam)))


@pytest.fixture(scope="session")
def heat_decomp():
    """alpha = 2, lambda = 0 on (0, 40] with 1000 nodes."""
    return build_decomp(2.0, 0.0, 1000, 40.0)


@pytest.fixture(scope="session")
def bessel_decomp():
    """alpha = 2, lambda = 2 (sigma = 2) on (0, 40] with 1000 nodes."""
    return build_decomp(2.0, 2.0, 1000, 40.0)


@pytest.fixture(scope="session")
def small_pair():
    """(lambda = 0, lambda = 2) at alpha = 2 on a graded 200-node grid of (0, 20]."""
    return build_decomp(2.0, 0.0, 200, 20.0, graded=True), build_decomp(2.0, 2.0, 200, 20.0, graded=True)


@pytest.fixture(scope="session")
def small_decomp(small_pair):
    return small_pair[1]


@pytest.fixture(scope="session")
def fractional_decomp():
    """alpha = 1.5, lambda = 0.5 on (0, 10] with 160 nodes."""
    return build_decomp(1.5, 0.5, 160, 10.0)
