import pytest

import mrhydro as m
from mrhydro import sim


@pytest.fixture(scope="session")
def table1():
    return m.ActuationLineParams()


@pytest.fixture(scope="session")
def bench():
    # K_I scaled so bench-level force references fit the 0-3.5 A clamp
    return m.ActuationLineParams(K_I=100.0)


@pytest.fixture(scope="session")
def compliant():
    return m.CompliantLoad()


@pytest.fixture(scope="session")
def blocked():
    return m.BlockedLoad()


@pytest.fixture(scope="session")
def tuned_gains(bench, compliant):
    """Margin-constrained tuner output for both loops, computed once."""
    return {"force": m.tune_pi(bench, compliant, "force"),
            "pressure": m.tune_pi(bench, compliant, "pressure")}


@pytest.fixture(scope="session")
def comparison_runs(bench, compliant):
    """The three benchmark controllers plus the doubled-kp force loop."""
    reference = sim.mixed_reference()
    controllers = sim.comparison_controllers(bench)
    runs = {name: m.run_simulation(bench, compliant, ctrl, reference, 24.0)
            for name, ctrl in controllers.items()}
    hot = controllers["force-pi"]
    runs["force-pi-2x"] = m.run_simulation(
        bench, compliant, sim.ForcePI(kp=2.0 * hot.kp, ki=hot.ki),
        reference, 6.0)
    return runs
