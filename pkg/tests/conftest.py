import functools
import sys

import pytest

from cqnls.curve import trace_curve
from cqnls.ground_state import solve_ground_state

# Regression values fixed after shooting and collocation agreed to 1e-12 at
# three frequencies (default 128-point curve, h = 0.02).
FROZEN = {
    "omega_star": 0.0255452,
    "m0": 189.459157,
    "omega_zero_energy": 0.05473528,
    "d0": 5.8148803,
    "rho": 240.446815,
}

SPOT_OMEGAS = (0.02, 0.05, 3.0 / 32.0, 0.13, 0.17)


@functools.lru_cache(maxsize=None)
def ground_state(omega, h=0.02):
    from cqnls.ground_state import ShootingConfig
    return solve_ground_state(omega, ShootingConfig(grid_h=h))


@pytest.fixture(scope="session")
def profile():
    return ground_state


@pytest.fixture(scope="session")
def curve():
    return trace_curve()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance")
    for key in sorted(mod.RESULTS, key=lambda k: int(k[2:])):
        terminalreporter.write_line(mod.RESULTS[key])
