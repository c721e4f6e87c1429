import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from pathsum.matrix import MatrixSpec, load_spec

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

MATRICES = Path(__file__).resolve().parent.parent / "matrices"


@pytest.fixture
def triangle_spec():
    """The oriented triangle ``[[0, t, 0], [0, 0, 1], [1, 0, 0]]`` on [0, 2]."""
    return load_spec(MATRICES / "triangle.json")


@pytest.fixture
def k2_spec():
    """``[[1, e^t], [e^-t, 1]]`` on [0, 2]."""
    return load_spec(MATRICES / "k2.json")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spec(rng, n, interval=(0.0, 1.0), density=1.0):
    """Dense-ish random matrix with polynomial, exponential and sine entries."""
    funcs = ["exp(t)", "exp(-t)", "sin(t)"]
    rows = []
    for _ in range(n):
        row = []
        for _ in range(n):
            if rng.random() > density:
                row.append("0")
            elif rng.random() < 0.5:
                a, b, c = (float(x) for x in rng.uniform(-1, 1, 3))
                row.append(f"{a!r} + {b!r}*t + {c!r}*t^2")
            else:
                row.append(funcs[rng.integers(len(funcs))])
        rows.append(row)
    return MatrixSpec.from_rows(rows, interval)


#: lines recorded by test_acceptance.py, printed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
