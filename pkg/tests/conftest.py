import numpy as np
import pytest

from speclab import ExtendedDomain


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_dom():
    return ExtendedDomain.interval(1.0, 1.0)


@pytest.fixture
def pi_dom():
    return ExtendedDomain.interval(np.pi, 1.0)


_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the acceptance summary, then return the flag."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
