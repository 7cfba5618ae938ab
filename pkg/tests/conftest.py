import itertools
import math

import pytest


def brute_points(d, j_max):
    """Every point of Z_+^d with size <= j_max, by nested enumeration."""
    if d == 1:
        return [(i,) for i in range(1, j_max + 1)]
    out = []
    for first in range(1, j_max + 1):
        for rest in brute_points(d - 1, j_max // first):
            out.append((first,) + rest)
    return out


def brute_box_sum(values_at, lower, upper):
    cells = itertools.product(*(range(a + 1, b + 1) for a, b in zip(lower, upper)))
    return math.fsum(values_at(c) for c in cells)


@pytest.fixture
def brute():
    return brute_points


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record a criterion outcome for the end-of-run PASS/FAIL listing."""
    store = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number, ok, detail=""):
        ok = bool(ok)
        store[number] = (ok, detail)
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        ok, detail = store[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
