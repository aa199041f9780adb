import math
import sys

import numpy as np
import pytest

from sontagkit import SystemModel, Weights
from sontagkit.catalog import get_entry
from sontagkit.model import ClfCandidate

SQRT3 = math.sqrt(3.0)


def central_difference(fn, x, h=1e-6):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return grad


@pytest.fixture
def double_integrator():
    entry = get_entry("double_integrator")
    return entry.system, entry.clf("riccati"), entry.weights


@pytest.fixture
def cubic():
    entry = get_entry("cubic1d")
    return entry.system, entry.clf("quadratic"), entry.weights


@pytest.fixture
def integrator():
    system = SystemModel.from_strings(["0"], [["1"]])
    return system, ClfCandidate.from_string("0.5*x1^2", 1), Weights([[1.0]], [[1.0]])


@pytest.fixture
def riccati_p():
    return np.array([[SQRT3, 1.0], [1.0, SQRT3]])


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is not None and acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance.RESULTS:
            terminalreporter.write_line(line)
