"""Shared fixtures: a tiny configuration that trains and evaluates in seconds"""

from pathlib import Path

from pytest import fixture

from mapnet.config import MapnetConfig
from mapnet.experiments import run_training


TINY_TOML = """
[mapnet.scenario]
n_ue = 6
max_maps = 3
slot_count = 6
blockage_prob = 0.2
seed = 0

[mapnet.placement]
n_ue_obs = 4
n_map_obs = 2
embedding_dim = 8
trunk = [8]
horizon = 4
batch_episodes = 1
epochs = 1
total_steps = 8
curve_window = 10

[mapnet.federation]
tau_f = 8
codebook_sizes = [1, 2]
train_map_range = [1, 2]
train_n_ue = 6
max_agents = 2

[mapnet.experiment]
name = "tiny"
episodes = 2
compare_seeds = 2
n_ue = 8
initial_maps = [1, 2]
workers = 0
refresh = 0.05
output_dir = "{output_dir}"
"""


def write_tiny_toml(directory: Path) -> Path:
    path = directory / "tiny.toml"
    path.write_text(TINY_TOML.format(output_dir=(directory / "runs").as_posix()))
    return path


@fixture
def tiny_toml(tmp_path: Path) -> Path:
    """Path of a tiny config whose outputs go below tmp_path"""

    return write_tiny_toml(tmp_path)


@fixture
def tiny_config(tiny_toml: Path) -> MapnetConfig:
    """Tiny config, nothing trained yet"""

    return MapnetConfig.load_toml(str(tiny_toml))


@fixture(scope="session")
def trained_toml(tmp_path_factory) -> Path:
    """Tiny config whose three regimes have been trained once for the session"""

    path = write_tiny_toml(tmp_path_factory.mktemp("trained"))
    run_training(MapnetConfig.load_toml(str(path)))
    return path


@fixture
def trained_config(trained_toml: Path) -> MapnetConfig:
    return MapnetConfig.load_toml(str(trained_toml))
