"""Configuration partagée pour les tests."""

import pytest
from click.testing import CliRunner

from blockmom.distributions import make_rng, make_spec
from blockmom.models import SampleBatch

# Configuration minimale d'une étude simulate
SIMULATE_TOML = """\
[distribution]
family = "gaussian"

[simulate]
N = 256
k = 8
l = 2
replicates = 1000
estimators = ["mom", "block_umom_subsampled", "sample_mean"]
seed = 7
"""

DIAGNOSE_TOML = """\
[distribution]
family = "rademacher"

[diagnose]
m_grid = [25, 100, 400]
R = 1000
seed = 3
"""

SWEEP_TOML = """\
[distributions.gauss]
family = "gaussian"

[distributions.pareto]
family = "pareto"
alpha = 3.5

[sweep]
N = 240
k = [4, 8]
l = 2
replicates = 1000
estimators = ["mom", "sample_mean"]
t_grid = [1.0, 2.0]
seed = 11
"""


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def gaussian():
    return make_spec("gaussian")


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture
def small_batch():
    """Échantillon gaussien reproductible de taille 60."""
    values = make_rng(2024).standard_normal(60)
    return SampleBatch(values)


@pytest.fixture
def write_config(tmp_path):
    """Écrit un fichier de configuration et retourne son chemin."""

    def _write(text: str, name: str = "config.toml"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def simulate_config(write_config):
    return write_config(SIMULATE_TOML, "simulate.toml")


@pytest.fixture
def diagnose_config_path(write_config):
    return write_config(DIAGNOSE_TOML, "diagnose.toml")


@pytest.fixture
def sweep_config_path(write_config):
    return write_config(SWEEP_TOML, "sweep.toml")
