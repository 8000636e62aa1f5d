import os
import sys

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

from glosa.optimizer import OptimizerConfig  # noqa: E402
from glosa.vehicle import RoadParams, VehicleParams  # noqa: E402


@pytest.fixture(scope="session")
def srx():
    return VehicleParams.cadillac_srx_2014()


@pytest.fixture(scope="session")
def cfg():
    return OptimizerConfig()


@pytest.fixture(scope="session")
def flat():
    return RoadParams(grade=0.0)


@pytest.fixture(scope="session")
def down():
    return RoadParams(grade=-0.03)


@pytest.fixture(scope="session")
def up():
    return RoadParams(grade=0.03)


# one PASS/FAIL line per acceptance criterion, shown at the end of the run
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def verdict():
    def record(criterion: str, ok: bool, detail: str) -> bool:
        ACCEPTANCE[criterion] = (bool(ok), detail)
        print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}")
        return bool(ok)
    return record


def _key(c: str):
    num = "".join(ch for ch in c if ch.isdigit())
    return (int(num) if num else 0, c)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE, key=_key):
        ok, detail = ACCEPTANCE[c]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {c:4s} {detail}")
