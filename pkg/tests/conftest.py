import pytest

from weighted_spectra.manifold import build_icosphere, build_torus_grid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def ico3():
    return build_icosphere(3)


@pytest.fixture(scope="session")
def ico4():
    return build_icosphere(4)


@pytest.fixture(scope="session")
def ico5():
    return build_icosphere(5)


@pytest.fixture(scope="session")
def torus64():
    return build_torus_grid(64)


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion, then assert."""

    def record(label, ok, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, f"{label}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
