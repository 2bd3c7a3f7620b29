import os
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from covert_ic.channel import load_spec
from covert_ic.corpus import (
    asymmetric_test_spec,
    hull_violating_spec,
    symmetric_test_spec,
    ternary_test_spec,
)

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).resolve().parents[1] / "data"

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


@pytest.fixture
def record_criterion():
    def record(number: int, title: str, passed: bool, detail: str):
        ACCEPTANCE[number] = (title, bool(passed), detail)
        print(f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}")


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def sym():
    return symmetric_test_spec()


@pytest.fixture(scope="session")
def asym():
    return asymmetric_test_spec()


@pytest.fixture(scope="session")
def hullbad():
    return hull_violating_spec()


@pytest.fixture(scope="session")
def ternary():
    return ternary_test_spec()


@pytest.fixture(scope="session")
def sym_from_file():
    return load_spec(DATA / "symmetric.json")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
