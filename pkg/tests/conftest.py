import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from twofilm.config import reference_config  # noqa: E402
from twofilm.integrator import integrate  # noqa: E402
from twofilm.config import initial_state  # noqa: E402

DEMO_CONFIGS = Path(__file__).resolve().parent.parent / "demos" / "configs"


@pytest.fixture(scope="session")
def reference_run():
    """Reference scenario integrated once to T = 0.1, every step kept."""
    cfg = reference_config()
    basis = cfg.basis()
    state0 = initial_state(cfg, basis)
    record = integrate(state0, cfg.params, basis, cfg.controls)
    return cfg, basis, record


@pytest.fixture
def demo_configs():
    return DEMO_CONFIGS


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][3:].rstrip(":"))):
            terminalreporter.write_line(line)
