import pytest

from dispqkd.model import DetectorSpec, FiberSpec, LinkConfig, SourceSpec

SIGMA = 1.57e12
BETA = -1.15e-26


@pytest.fixture
def source():
    return SourceSpec(SIGMA, SIGMA, 0.9)


@pytest.fixture
def make_config():
    def make(sigma=SIGMA, rho=0.9, length=0.0, dark=1e3, jitter=0.0, rep=1e7, sigma2=None):
        return LinkConfig(
            source=SourceSpec(sigma, sigma if sigma2 is None else sigma2, rho),
            fiber=FiberSpec(BETA, 0.2, length),
            detector=DetectorSpec(dark, jitter, rep),
        )

    return make


# acceptance criteria report their verdicts here; printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
