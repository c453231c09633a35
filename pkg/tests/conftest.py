import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def t2_solution():
    from hjblab.candidates import solve_hjb_from_steady_state
    from hjblab.model import theorem2_model

    return solve_hjb_from_steady_state(theorem2_model(), (0.1, 2.0))


@pytest.fixture(scope="session")
def small_dp_cfg():
    import numpy as np
    from hjblab.dp_oracle import DPConfig

    return DPConfig(dt=0.02, T=20.0, k_grid=np.linspace(0.02, 4.0, 200), c_max=8.0, c_grid_size=101)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
