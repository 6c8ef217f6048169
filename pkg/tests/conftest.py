import numpy as np
import pytest
from hypothesis import settings

from crackpinn.elasticity import Material
from crackpinn.kinematics import CrackTip, EnrichedModel
from crackpinn.network import init_network
from crackpinn.sif import k_to_ktilde

settings.register_profile("repo", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("repo")


def williams_model(k1, k2, material=None, position=(0.0, 0.0), orientation=0.0, subdomains=(), n_nets=1):
    """Zeroed networks plus one tip whose enrichment reproduces the Williams field exactly."""
    material = material or Material()
    nets = tuple(init_network(1, 2, seed=0) for _ in range(n_nets))
    nets = tuple(n.with_params(np.zeros(n.n_params)) for n in nets)
    tip = CrackTip(position, orientation, k_to_ktilde(k1, material.mu), k_to_ktilde(k2, material.mu))
    return EnrichedModel(nets, (tip,), material, subdomains)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_sessionstart(session):
    from test_acceptance import CACHE

    (CACHE / "report.txt").unlink(missing_ok=True)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import CACHE

    report = CACHE / "report.txt"
    if report.exists() and report.read_text().strip():
        terminalreporter.section("acceptance criteria")
        for line in report.read_text().splitlines():
            terminalreporter.write_line(line)
