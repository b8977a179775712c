import sys

import numpy as np
import pytest
from hypothesis import settings

from acstrace.popgraph import PopulationGraph

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# Contact graph drawn as a 2x5 grid: cases 1, 2 and 6; edge nodes 0, 3, 5, 7;
# other noncases 4 and 8.
FIG_EDGES = [(1, 0), (1, 2), (2, 3), (4, 3), (5, 1), (5, 6), (5, 2), (6, 7), (7, 3), (8, 7)]


@pytest.fixture
def fig_pop():
    y = np.zeros(9, dtype=np.int64)
    y[[1, 2, 6]] = 1
    return PopulationGraph.from_edges(y, FIG_EDGES)


@pytest.fixture
def six_pop():
    """N=6 with networks {1,2} and {3}; units 0, 4, 5 are isolated noncases."""
    y = np.array([0, 1, 1, 1, 0, 0])
    return PopulationGraph.from_edges(y, [(1, 2)])


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
