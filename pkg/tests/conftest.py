import pytest

from threshold_rem.model import validate


@pytest.fixture
def unit():
    """P = N0 = 2, so C = 1 and the triple point sits at (R, beta) = (1, 1)."""
    return validate(P=2.0, N0=2.0, T=10.0, Delta0=1.0, R=0.5, M=0.4)


@pytest.fixture
def joint():
    return validate(P=2.0, N0=2.0, T=10.0, Delta0=1.0, R=0.5, M=0.4,
                    alpha_min=0.5, alpha_max=2.0, strict_alpha=False)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
