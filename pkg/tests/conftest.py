import numpy as np
import pytest
from hypothesis import settings

from planarfield import corpus
from planarfield.exprcore import parse_field

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def fields():
    return {e.name: e.field() for e in corpus.ENTRIES}


@pytest.fixture(scope="session")
def F():
    return corpus.get("F").field()


@pytest.fixture(scope="session")
def radial():
    return parse_field("-x", "-y")


@pytest.fixture
def rng():
    return np.random.default_rng(42)


_ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    """Store one acceptance line; printed in the terminal summary."""

    def _record(number: int, ok: bool, detail: str):
        _ACCEPTANCE[number] = (ok, detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
