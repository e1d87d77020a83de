import numpy as np
import pytest

from vasqforge.core import VesselForest


def random_tree(rng, n, width=64, height=64, roots=1):
    """Random forest with valid parent links; geometry is arbitrary."""
    f = VesselForest(width, height)
    for i in range(n):
        pos = (rng.uniform(0, width), rng.uniform(0, height))
        parent = None if i < roots else int(rng.integers(0, i))
        f.add_node(pos, parent)
    return f


def chain(n, width=64, height=64):
    f = VesselForest(width, height)
    for i in range(n):
        f.add_node((1.0 + i, 1.0), i - 1 if i else None)
    return f


def star(k, width=64, height=64):
    f = VesselForest(width, height)
    f.add_node((32.0, 32.0))
    for j in range(k):
        f.add_node((32.0 + j, 40.0), 0)
    return f


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict; the summary prints every verdict in order."""
    results = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        results[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE_KEY, {})
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
