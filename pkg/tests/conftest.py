import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sketchguide.calibration import default_profile

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def identity_profile():
    """1 px per mm, camera == projector: pixel (x, y) is workspace (x, y) mm."""
    return default_profile(cam_dims=(512, 424), workspace_mm=(511.0, 423.0))


@pytest.fixture(scope="session")
def desk_profile():
    """The stock rig: full workspace seen by a 512x424 camera, projector = camera."""
    return default_profile()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion, printed unconditionally."""
    rows = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" in nodeid and "::" in nodeid:
                verdict = "PASS" if status == "passed" else "FAIL"
                rows.append((nodeid.split("::")[-1], verdict))
    if rows:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, verdict in rows:
            terminalreporter.write_line(f"[{verdict}] {name}")
