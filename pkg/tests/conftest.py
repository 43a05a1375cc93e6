import json
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from specidem.io import from_pairs
from specidem.model import CoefficientFamily, SpectrumSpec, build_operator

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def frozen():
    return json.loads((DATA / "frozen.json").read_text())


def make_operator(lam, alpha, beta):
    return build_operator(SpectrumSpec(np.asarray(lam, dtype=complex)),
                          CoefficientFamily(np.asarray(alpha, dtype=complex),
                                            np.asarray(beta, dtype=complex)))


def frozen_operator(entry):
    return make_operator(from_pairs(entry["lambdas"]), from_pairs(entry["alpha"]),
                         from_pairs(entry["beta"]))


@pytest.fixture
def two_by_two():
    """diag(0.5, -0.5) + u (x) u with u = (0.1, 0.1)."""
    u = np.array([[0.1], [0.1]])
    return make_operator([0.5, -0.5], u, u)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda t: t[0]):
            terminalreporter.write_line(line[1])
