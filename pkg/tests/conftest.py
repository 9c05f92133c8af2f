import functools
import math

import pytest

from freeplate import Ball, PlateParams, Rectangle, assemble, build_basis, solve

UNIT_SQUARE = Rectangle((1.0, 1.0))
UNIT_DISK = Ball(1.0, 2)
# Square with the area of the unit disk.
SQRT_PI = math.sqrt(math.pi)
PI_SQUARE = Rectangle((SQRT_PI, SQRT_PI))


@functools.lru_cache(maxsize=None)
def discretization(domain, p):
    basis = build_basis(domain, p)
    return basis, assemble(domain, basis)


@functools.lru_cache(maxsize=None)
def spectrum(domain, p, tau, sigma, k=12):
    basis, fm = discretization(domain, p)
    return solve(fm, PlateParams(domain.n, tau, sigma), k)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record_acceptance():
    def record(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record
