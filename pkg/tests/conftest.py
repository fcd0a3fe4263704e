import numpy as np
import pytest

from reslab.arith import character_from_index
from reslab.coeffs import dirichlet_source, gl2_holomorphic_source, zeta_source


@pytest.fixture(scope="session")
def zeta():
    return zeta_source()


@pytest.fixture(scope="session")
def chi3():
    return dirichlet_source(character_from_index(3, [1]))


@pytest.fixture(scope="session")
def delta():
    return gl2_holomorphic_source(12, max_prime=100_000)


@pytest.fixture(scope="session")
def delta_e4():
    return gl2_holomorphic_source(16, max_prime=100_000)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance():
    """Record one line per acceptance criterion and return the verdict."""

    def record(k: int, ok: bool, detail: str, seconds: float, limit: float) -> bool:
        fast = seconds < limit
        verdict = "PASS" if ok and fast else "FAIL"
        line = f"acceptance {k:2d}: {verdict}  {detail}  [{seconds:.2f} s / limit {limit:g} s]"
        ACCEPTANCE.append(line)
        print(line)
        return ok and fast

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
