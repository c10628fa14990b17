import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from durrmeyer.kernels import make_kernel

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def b2():
    return make_kernel("bspline2")


@pytest.fixture(scope="session")
def fk():
    return make_kernel("f-kernel")


@pytest.fixture(scope="session")
def b2x2():
    return make_kernel("tensor:bspline2^2")


@pytest.fixture(scope="session")
def br3():
    return make_kernel("bochner-riesz:gamma=3", 1)


@pytest.fixture(scope="session")
def br3_2d():
    return make_kernel("bochner-riesz:gamma=3", 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance verdicts, one line per criterion, gathered by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def record_acceptance(key: str, part: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(key, []).append((part, bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split("-")[1])):
        parts = ACCEPTANCE[key]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(f"{p}: {'ok' if ok else 'FAIL'} ({d})" for p, ok, d in parts)
        terminalreporter.write_line(f"{key} {status}  {detail}")
