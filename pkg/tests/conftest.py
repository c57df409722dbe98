import mpmath
import pytest

_ACCEPTANCE_LINES: list = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def mp_ml(alpha, beta, z, dps=50):
    """Reference E_{alpha,beta}(z) by the mpmath power series at high precision."""
    with mpmath.workdps(dps):
        z = mpmath.mpmathify(z)
        total = mpmath.mpf(0)
        k = 0
        while True:
            term = z**k * mpmath.rgamma(alpha * k + beta)
            total += term
            if k > 10 and abs(term) < mpmath.mpf(10) ** (-dps + 5) * max(1, abs(total)):
                break
            k += 1
        return complex(total)


@pytest.fixture
def oracle_ml():
    return mp_ml
