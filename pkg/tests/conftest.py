import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import umtsvm as m

settings.register_profile("repo", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def blobs(tasks=2, per_class=20, dimension=2, noise=0.5, seed=0, universum=True):
    """Normalised synthetic dataset, with midpoint Universum by default."""
    ds, _ = m.normalize(m.synth_multitask(tasks, per_class, dimension, 1.0, noise, seed))
    if universum:
        ds = m.generate_universum(ds, m.UniversumConfig(seed=seed))
    return ds


@pytest.fixture
def small_ds():
    return blobs()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
