import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from voxedge.grid import SyntheticSpec, analytic_surface_points, generate_synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def sphere_scene():
    """R = 10 mm sphere on a 96^3 grid at 0.5 mm, with its analytic reference cloud."""
    spec = SyntheticSpec("sphere", radius=10.0, amplitude=100.0, ramp_width=0.5)
    grid = generate_synthetic(spec, 96, 0.5, 0.0)
    center = np.asarray(grid.center())
    reference = analytic_surface_points(spec, 100_000, seed=1, center=center)
    return spec, grid, center, reference


_ACCEPTANCE = pytest.StashKey()


class _Criterion:
    def __init__(self, log, number, title, budget):
        self.log, self.number, self.title, self.budget = log, number, title, budget
        self.notes = []

    def note(self, text):
        self.notes.append(text)

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        over = self.budget is not None and elapsed > self.budget
        ok = exc_type is None and not over
        detail = "; ".join(self.notes)
        if exc_type is not None:
            detail = f"{detail}; {exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}".lstrip("; ")
        if over:
            detail = f"{detail}; over budget ({self.budget:g} s)".lstrip("; ")
        line = f"{'PASS' if ok else 'FAIL'}  criterion {self.number:>2}  {self.title}  [{elapsed:.2f} s]"
        self.log[self.number] = line + (f"\n      {detail}" if detail else "")
        if over and exc_type is None:
            raise AssertionError(f"criterion {self.number} took {elapsed:.1f} s, budget {self.budget:g} s")
        return False


@pytest.fixture
def criterion(request):
    """``with criterion(n, title, budget_s) as c:`` records one PASS/FAIL line for the summary."""
    log = request.config.stash.setdefault(_ACCEPTANCE, {})
    return lambda number, title, budget=None: _Criterion(log, number, title, budget)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        terminalreporter.write_line(log[number])
