"""Test the config.py module"""

from dataclasses import replace
from pathlib import Path

import pytest

from mapnet.config import (
    ExperimentConfig,
    FederationConfig,
    MapnetConfig,
    PlacementConfig,
    RadioConfig,
    ScenarioConfig,
    TradeoffConfig,
)
from mapnet.errors import ConfigError
from mapnet.geometry import Region


EXAMPLE_TOML = Path(__file__).parent.parent / "mapnet_config.toml"


class TestSections:
    """Test the validation of every section"""

    @staticmethod
    def test_defaults_are_valid() -> None:
        """test defaults"""

        assert ScenarioConfig().validate() is None
        assert RadioConfig().validate() is None
        assert TradeoffConfig().validate() is None
        assert PlacementConfig().validate() is None
        assert FederationConfig().validate() is None
        assert ExperimentConfig(workers=0).validate() is None

    @staticmethod
    def test_scenario_errors() -> None:
        """test invalid scenario values"""

        errors = ScenarioConfig(n_ue=0, blockage_prob=1.5, region=Region(x_max=-1.0)).validate()
        assert errors is not None
        messages = " ".join(str(e) for e in errors)
        assert "n_ue" in messages
        assert "blockage_prob" in messages
        assert "x_max" in messages

    @staticmethod
    def test_placement_gamma() -> None:
        """test the discount factor stays below one"""

        assert PlacementConfig(gamma=1.0).validate() is not None
        assert PlacementConfig(gamma=0.0).validate() is None

    @staticmethod
    def test_federation_ranges() -> None:
        """test alpha_f and train_map_range"""

        assert FederationConfig(alpha_f=1.5).validate() is not None
        assert FederationConfig(train_map_range=(3, 2)).validate() is not None
        assert FederationConfig(train_map_range=(2, 7), max_agents=6).validate() is not None

    @staticmethod
    def test_experiment_values() -> None:
        """test workers, regimes and action mode"""

        assert ExperimentConfig(workers=-1).validate() is not None
        assert ExperimentConfig(workers=10_000).validate() is not None
        assert ExperimentConfig(workers=0, regimes=("codebook", "bogus")).validate() is not None
        assert ExperimentConfig(workers=0, action_mode="random").validate() is not None

    @staticmethod
    def test_episode_count() -> None:
        """test the full scale episode budget"""

        assert ExperimentConfig(episodes=7).episode_count == 7
        assert ExperimentConfig(episodes=7, full_scale=True).episode_count == 200


class TestMapnetConfig:
    """Test MapnetConfig"""

    @staticmethod
    def test_cross_section_checks() -> None:
        """test max_agents against max_maps"""

        config = MapnetConfig(experiment=ExperimentConfig(workers=0))
        assert config.validate() is None

        too_many = replace(config, federation=replace(config.federation, max_agents=9))
        assert too_many.validate() is not None

        dynamic = replace(config, experiment=replace(config.experiment, dynamic_map_management=True))
        errors = dynamic.validate()
        assert errors is not None
        assert any("max_agents" in str(e) for e in errors)

    @staticmethod
    def test_load_example_toml() -> None:
        """test the documented example file loads with the defaults"""

        config = MapnetConfig.load_toml(str(EXAMPLE_TOML))
        assert config == MapnetConfig()
        assert config.federation.codebook_sizes == (2, 3, 4)
        assert config.scenario.donor_location == (100.0, 100.0, 10.0)

    @staticmethod
    def test_load_missing_file(tmp_path: Path) -> None:
        """test unreadable files"""

        with pytest.raises(ConfigError):
            MapnetConfig.load_toml(str(tmp_path / "absent.toml"))

    @staticmethod
    def test_unknown_keys(tmp_path: Path) -> None:
        """test unknown sections and keys"""

        path = tmp_path / "bad.toml"
        path.write_text("[mapnet.scenario]\nn_ues = 3\n")
        with pytest.raises(ConfigError, match="n_ues"):
            MapnetConfig.load_toml(str(path))

        path.write_text("[mapnet.radar]\nx = 1\n")
        with pytest.raises(ConfigError, match="radar"):
            MapnetConfig.load_toml(str(path))

        path.write_text("[other]\nx = 1\n")
        with pytest.raises(ConfigError):
            MapnetConfig.load_toml(str(path))

    @staticmethod
    def test_override() -> None:
        """test cli overrides are coerced to the field type"""

        config = MapnetConfig()
        config = config.override("scenario.region.x_max", "300")
        config = config.override("federation.codebook_sizes", "2,3")
        config = config.override("experiment.dynamic_map_management", "true")
        config = config.override("placement.total_steps", "5000")

        assert config.scenario.region.x_max == 300.0
        assert isinstance(config.scenario.region.x_max, float)
        assert config.federation.codebook_sizes == (2, 3)
        assert config.experiment.dynamic_map_management is True
        assert config.placement.total_steps == 5000

    @staticmethod
    def test_override_errors() -> None:
        """test unknown keys, tables and bad values"""

        config = MapnetConfig()
        with pytest.raises(ConfigError):
            config.override("scenario.n_users", "3")
        with pytest.raises(ConfigError):
            config.override("scenario.region", "3")
        with pytest.raises(ConfigError):
            config.override("scenario.n_ue", "2.5")
        with pytest.raises(ConfigError):
            config.override("experiment.full_scale", "maybe")

    @staticmethod
    def test_config_hash() -> None:
        """test the hash is stable and sensitive to every value"""

        assert MapnetConfig().config_hash() == MapnetConfig().config_hash()
        assert MapnetConfig().config_hash() != MapnetConfig().override("radio.mu", "0.5").config_hash()

    @staticmethod
    def test_resolved_is_plain() -> None:
        """test the resolved config only holds json types"""

        resolved = MapnetConfig().resolved()
        assert resolved["scenario"]["region"]["x_max"] == 200.0
        assert resolved["federation"]["train_map_range"] == [2, 5]
