"""Session fixtures: memoized meshes, hierarchies, and stiffness matrices.

The acceptance suite reuses a handful of expensive dense assemblies across
many tests; building each at most once keeps the full run inside a sensible
wall-time budget (the largest cached matrix sits on the 3969-DOF uniform
level).  The report fixture collects one line per acceptance criterion and
prints them all in a dedicated section at the end of the run.
"""

import pytest

from fracbpx import (
    assemble_fractional_stiffness,
    assemble_load,
    build_graded_hierarchy,
    build_uniform_hierarchy,
    graded_stage_meshes,
    init_square,
)

_ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_report():
    """Record one pass/fail line for a criterion, then enforce it."""

    def report(criterion, ok, detail):
        line = "criterion %s: %s - %s" % (criterion, "PASS" if ok else "FAIL", detail)
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


class _Memo:
    """Session-lifetime build-once store keyed by hashable tuples."""

    def __init__(self):
        self._store = {}

    def get(self, key, build):
        if key not in self._store:
            self._store[key] = build()
        return self._store[key]


@pytest.fixture(scope="session")
def memo():
    return _Memo()


@pytest.fixture(scope="session")
def square_hier(memo):
    """Uniform hierarchy with ``J`` refinements over the unit-square mesh."""

    def get(J):
        return memo.get(("hier", J), lambda: build_uniform_hierarchy(init_square(), J))

    return get


@pytest.fixture(scope="session")
def square_K(memo, square_hier):
    """Dense fractional stiffness on the finest level of ``square_hier(J)``."""

    def get(J, s):
        return memo.get(
            ("K", J, float(s)),
            lambda: assemble_fractional_stiffness(square_hier(J).meshes[-1], s),
        )

    return get


@pytest.fixture(scope="session")
def square_b(memo, square_hier):
    """Load vector of f = 1 on the finest level of ``square_hier(J)``."""

    def get(J):
        return memo.get(
            ("b", J), lambda: assemble_load(square_hier(J).meshes[-1], 1.0)
        )

    return get


@pytest.fixture(scope="session")
def graded_ladder(memo):
    """All graded stages (theta=4, mu=2) up to 14000 DOFs on the square."""

    return memo.get(
        ("ladder",), lambda: list(graded_stage_meshes(4.0, 2.0, 14000))
    )


@pytest.fixture(scope="session")
def graded_hier(memo, graded_ladder):
    """Memoized single-scale hierarchy for a ladder stage number."""

    def get(stage):
        for st, mesh, history in graded_ladder:
            if st == stage:
                return memo.get(
                    ("gh", stage), lambda: build_graded_hierarchy(mesh, history)
                )
        raise KeyError(stage)

    return get
