import numpy as np
import pytest
from hypothesis import strategies as st

from macres import FiniteDistribution, Mac, load_channel


@pytest.fixture(scope="session")
def adder():
    return load_channel("adder2.json")


@pytest.fixture(scope="session")
def noisy():
    return load_channel("noisy223.json")


@pytest.fixture(scope="session")
def u2():
    return FiniteDistribution.uniform((0, 1))


def random_mac(rng, nx=2, ny=2, nz=3, name="random"):
    t = rng.dirichlet(np.ones(nz), size=(nx, ny))
    return Mac(tuple(range(nx)), tuple(range(ny)), tuple(range(nz)), t, name)


def random_dist(rng, k):
    return FiniteDistribution.from_weights(rng.dirichlet(np.ones(k)))


seeds = st.integers(min_value=0, max_value=2**32 - 1)


# acceptance results, printed after the run in criterion order
ACCEPTANCE: dict = {}


def record(k: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[k] = (ok, detail)
    print(f"acceptance {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
