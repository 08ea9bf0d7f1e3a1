import numpy as np
import pytest

from cascadeqed import experiments as ex
from cascadeqed.cascade import CascadeParams
from cascadeqed.config import RunConfig
from cascadeqed.rabi import SubsystemSpec
from cascadeqed.spectrum import composite_model

REF_ETA = 0.5
REF_THETA = np.pi / 5

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    def report(number: int, passed: bool, detail: str) -> None:
        line = f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} | {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_model():
    """Three kept levels and fast rates: cheap enough for RK4 cross-checks."""
    spec = SubsystemSpec(omega_c=1.18243, eta=REF_ETA, theta=REF_THETA, n_keep=3)
    params = CascadeParams(kappa1=0.05, kappa2=0.02, gamma1=0.003, gamma2=0.002, G=0.8)
    return composite_model(spec, spec, params)


@pytest.fixture(scope="session")
def ref_config():
    return RunConfig()


@pytest.fixture(scope="session")
def ref_point(ref_config):
    return ex.locate_operating_point(ref_config)


@pytest.fixture(scope="session")
def ref_model(ref_config, ref_point):
    return ex.dynamics_model(ref_config, ref_point.omega_c)


@pytest.fixture(scope="session")
def ref_pulse(ref_config, ref_point):
    return ex.make_pulse(ref_config, ref_point.omega_in)


@pytest.fixture(scope="session")
def ref_dynamics(ref_config, ref_point):
    series, _ = ex.run_dynamics(ref_config, ref_point)
    return series
