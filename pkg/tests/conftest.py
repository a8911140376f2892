import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from securezone import protocol  # noqa: E402
from securezone.groups import TransparentGroup  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
UNIVERSE = ("officer", "rangemaster", "security", "civilian", "licensed", "instructor", "military", "reserve")

_acceptance_lines: list[str] = []


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(scope="session")
def group():
    return TransparentGroup()


@pytest.fixture
def world():
    """A CA with one honest SZA (policy 'officer or rangemaster') and an officer's bundle."""
    r = random.Random(99)
    ca = protocol.ca_setup(r, universe=UNIVERSE)
    sza = protocol.create_sza(ca, 7, "officer or rangemaster", r)
    bundle = protocol.firearm_register(ca, ["officer"], 11, 12, 2_000_000_000, r)
    return ca, sza, bundle, r


@pytest.fixture(scope="session")
def acceptance_report():
    def record(criterion: str, passed: bool, detail: str = ""):
        _acceptance_lines.append(f"{'PASS' if passed else 'FAIL'}  {criterion}  {detail}".rstrip())
    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
