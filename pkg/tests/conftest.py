import sys

import numpy as np
import pytest

from fftproj.grid import Grid
from fftproj.stencils import SCHEMES, DerivativeScheme

FINITE_TAP = ("central", "forward", "least_squares", "fe_linear")


def admissible(grid: Grid) -> list[str]:
    """Schemes that may build a projection on ``grid``."""
    return [
        s for s in SCHEMES
        if not any(grid.is_even) or DerivativeScheme(s).even_grid_safe(grid)
    ]


def grid_scheme_pairs(sizes=((7, 7), (8, 8))):
    return [(n, s) for n in sizes for s in admissible(Grid(n))]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
