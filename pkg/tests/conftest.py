import pytest

from phononblock.fock import FockBasis
from phononblock.lindblad import build_liouvillian, evolve, fock_state, steady_state
from phononblock.model import RwaParams, build_rwa_hamiltonian

OPERATING_POINT = RwaParams(delta=0.29, j=110.0, f=10.0, u=3e-5, n_th=0.0)


def liouvillian(params, n_max=10):
    basis = FockBasis(n_max, n_max) if isinstance(n_max, int) else FockBasis(*n_max)
    return build_liouvillian(build_rwa_hamiltonian(params, basis), params, basis), basis


@pytest.fixture(scope="session")
def operating_point():
    L, basis = liouvillian(OPERATING_POINT)
    return OPERATING_POINT, L, basis


@pytest.fixture(scope="session")
def operating_steady_state(operating_point):
    _, L, _ = operating_point
    return steady_state(L)


@pytest.fixture(scope="session")
def operating_eigen_state(operating_point):
    _, L, _ = operating_point
    return steady_state(L, method="eigen")


@pytest.fixture(scope="session")
def operating_evolved_state(operating_point):
    # Slowest relaxation rate is about 1, so t = 30 leaves ~1e-8 of the transient.
    _, L, basis = operating_point
    return evolve(fock_state(basis, 0, 0), L, 30.0, 2.5 / L.spectral_bound())


ACCEPTANCE_LINES = {}


def record_criterion(number, title, ok, detail):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
