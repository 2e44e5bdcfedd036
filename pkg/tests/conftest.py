import numpy as np
import pytest

from cotgeo.expr import Chart, parse_scalar_field
from cotgeo.sampling import SamplingPlan, sample_points

# Hamiltonians exercised throughout the suite.  "warped" is the one with
# non-zero curvature; the others have flat Hamilton connections.
CORPUS = {
    "euclidean": (2, "0.5*(p1^2+p2^2)+x1^2*x2"),
    "curved1": (1, "0.5*(1+x1^2)*p1^2"),
    "curved2": (2, "0.5*((1+x1^2)*p1^2+p2^2)"),
    "warped": (2, "0.5*((1+x2^2)*p1^2+p2^2)"),
    "free": (1, "0.5*p1^2"),
}


def hamiltonian(name):
    n, text = CORPUS[name]
    return parse_scalar_field(text, Chart.cotangent(n))


def points(n, count=100, seed=42):
    return sample_points(SamplingPlan(n, seed=seed, count=count))


@pytest.fixture(params=sorted(CORPUS))
def corpus_name(request):
    return request.param


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
