import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from graphot import ProblemParams, background_green, build_graph, lattice_graph, path_graph

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

DUMBBELL = {"interior": ["a"], "boundary": ["b"], "edges": [["a", "b"]], "sources": ["b"], "receivers": ["b"]}


@pytest.fixture
def dumbbell():
    return build_graph(DUMBBELL)


@pytest.fixture
def dumbbell_G0(dumbbell):
    return background_green(dumbbell, ProblemParams(alpha0=1.0))


@pytest.fixture
def path3_closed():
    """Path a-b-c with a boundary vertex at each end."""
    return build_graph({
        "interior": ["a", "b", "c"],
        "boundary": ["l", "r"],
        "edges": [["l", "a"], ["a", "b"], ["b", "c"], ["c", "r"]],
        "sources": ["l", "r"],
        "receivers": ["l", "r"],
    })


@pytest.fixture(scope="session")
def lattice12_G0():
    return background_green(lattice_graph(12, 12), ProblemParams(alpha0=0.1, t=0.0))


@pytest.fixture(scope="session")
def lattice3_G0():
    return background_green(lattice_graph(3, 3), ProblemParams(alpha0=1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def path10():
    return path_graph(10)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion and assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
