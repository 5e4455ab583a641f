import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from resectsim.testing import make_phantom  # noqa: E402


@pytest.fixture(scope="session")
def phantom96():
    """Shared 96^3 synthetic head: (image, parcellation, scheme)."""
    return make_phantom(dims=(96, 96, 96), seed=7)


@pytest.fixture(scope="session")
def phantom64():
    """Smaller phantom for I/O and CLI tests."""
    return make_phantom(dims=(64, 64, 64), seed=3)


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else "FAIL"
    print(f"\n[ACCEPTANCE] {name}: {status}", flush=True)
