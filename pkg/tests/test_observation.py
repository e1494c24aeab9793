"""Test the observation.py module"""

from dataclasses import replace

import numpy as np
import pytest
from pytest import fixture

from mapnet.config import ScenarioConfig
from mapnet.errors import InactiveMapError
from mapnet.observation import build_observation
from mapnet.scenario import GBPS, NetworkState, activate_map, build_scenario


@fixture
def state() -> NetworkState:
    """Two unblocked UEs and two MAPs"""

    _state = build_scenario(ScenarioConfig(n_ue=2, max_maps=3, blockage_prob=0.0))
    activate_map(_state, 1, np.array([100.0, 100.0, 60.0]))
    activate_map(_state, 2, np.array([150.0, 100.0, 60.0]))
    _state.ues[0].loc = np.array([100.0, 100.0])
    _state.ues[1].loc = np.array([120.0, 90.0])
    _state.ues[0].demand_bps = 2 * GBPS
    _state.ues[1].demand_bps = 0.0
    return _state


class TestBuildObservation:
    """Test build_observation"""

    @staticmethod
    def test_shapes_and_masks(state: NetworkState) -> None:
        """test unused rows are zero and masked"""

        obs = build_observation(state, 1, n_ue=15, n_map=5)
        assert obs.shape == (15, 5)
        assert obs.ue_mask.sum() == 2
        assert np.all(obs.ue_block[2:] == 0.0)
        assert np.count_nonzero(obs.ue_mask == 0) == 13
        assert obs.map_mask.tolist() == [1.0, 0.0, 0.0, 0.0, 0.0]
        assert np.all(obs.map_block[1:] == 0.0)

    @staticmethod
    def test_relative_features(state: NetworkState) -> None:
        """test UE and MAP rows are relative to the observing MAP"""

        obs = build_observation(state, 1, n_ue=4, n_map=2)
        assert obs.ue_block[0] == pytest.approx([0.0, 0.0, -60.0 / 120.0, 0.2])
        assert obs.ue_block[1] == pytest.approx([20.0 / 200.0, -10.0 / 200.0, -60.0 / 120.0, 0.0])
        assert obs.map_block[0] == pytest.approx([50.0 / 200.0, 0.0, 0.0])
        assert obs.self_block == pytest.approx([0.5, 0.5, 40.0 / 100.0])

    @staticmethod
    def test_nearest_first(state: NetworkState) -> None:
        """test rows are truncated to the nearest entities"""

        obs = build_observation(state, 2, n_ue=1, n_map=1)
        assert obs.ue_block[0, 0] == pytest.approx(-30.0 / 200.0)
        assert obs.ue_mask.tolist() == [1.0]

    @staticmethod
    def test_blocked_invisible(state: NetworkState) -> None:
        """test blocked UEs are not observed"""

        state.ues[0].blocked = True
        obs = build_observation(state, 1, n_ue=4, n_map=2)
        assert obs.ue_mask.sum() == 1
        assert obs.ue_block[0, 0] == pytest.approx(0.1)

        state.ues[1].blocked = True
        assert build_observation(state, 1, n_ue=4, n_map=2).ue_mask.sum() == 0

    @staticmethod
    def test_demand_clipped(state: NetworkState) -> None:
        """test demands above the normalisation are clipped"""

        state.ues[0].demand_bps = 20 * GBPS
        assert build_observation(state, 1, demand_norm_gbps=10.0).ue_block[0, 3] == 1.0
        assert build_observation(state, 1, demand_norm_gbps=40.0).ue_block[0, 3] == pytest.approx(0.5)

    @staticmethod
    def test_translation_invariant(state: NetworkState) -> None:
        """test shifting the whole world horizontally leaves the observation unchanged"""

        before = build_observation(state, 1, n_ue=4, n_map=2)

        offset = np.array([37.0, -12.0, 0.0])
        state.config = replace(state.config, region=state.region.translated(offset))
        for ue in state.ues:
            ue.loc = ue.loc + offset[:2]
        for node in state.active_maps:
            node.loc = node.loc + offset

        after = build_observation(state, 1, n_ue=4, n_map=2)
        for name in ("ue_block", "ue_mask", "map_block", "map_mask", "self_block"):
            assert np.allclose(getattr(before, name), getattr(after, name))

    @staticmethod
    def test_equals(state: NetworkState) -> None:
        """test observations of an unchanged state are equal"""

        assert build_observation(state, 1).equals(build_observation(state, 1))
        assert not build_observation(state, 1).equals(build_observation(state, 2))

    @staticmethod
    def test_inactive_map(state: NetworkState) -> None:
        """test idle MAPs have no observation"""

        with pytest.raises(InactiveMapError):
            build_observation(state, 3)
