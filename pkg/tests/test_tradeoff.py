"""Test the tradeoff.py module"""

import numpy as np
import pytest
from pytest import fixture

from mapnet.config import ScenarioConfig, TradeoffConfig
from mapnet.network import AssociationState
from mapnet.scenario import NetworkState, activate_map, build_scenario
from mapnet.tradeoff import (
    Activate,
    Repatriate,
    TradeoffController,
    inertia,
    initial_map_count,
    spawn_location,
)


INF = float("inf")


@fixture
def state() -> NetworkState:
    """MAP 1 serving one UE straight below, MAP 2 serving three UEs far below it, MAP 3 idle"""

    _state = build_scenario(ScenarioConfig(n_ue=4, max_maps=3, blockage_prob=0.0, ue_speed=0.0))
    activate_map(_state, 1, np.array([50.0, 100.0, 60.0]))
    activate_map(_state, 2, np.array([150.0, 100.0, 60.0]))
    _state.ues[0].loc = np.array([50.0, 100.0])
    for ue in _state.ues[1:]:
        ue.loc = np.array([150.0, 100.0])
    _state.association = AssociationState(serving={0: 1, 1: 2, 2: 2, 3: 2}, beam_limits={0: INF, 1: 10, 2: 10})
    return _state


def with_history(controller: TradeoffController, i: int, history: list[int]) -> None:
    track = controller.tracker(i)
    track.history = list(history)
    track.theta = history[-1]


class TestInitialMapCount:
    """Test initial_map_count"""

    @staticmethod
    @pytest.mark.parametrize(
        "n_ue, beams, max_maps, expected",
        [(25, 10, 8, 3), (60, 10, 8, 6), (5, 10, 4, 1), (200, 10, 8, 8), (0, 10, 4, 1)],
    )
    def test_examples(n_ue: int, beams: float, max_maps: int, expected: int) -> None:
        """test ceil(K / K_i) clamped to [1, M]"""

        assert initial_map_count(n_ue, beams, max_maps) == expected

    @staticmethod
    def test_invalid_beams() -> None:
        """test non positive beam counts"""

        with pytest.raises(ValueError):
            initial_map_count(10, 0, 4)


class TestMonitor:
    """Test inertia and TradeoffController.monitor"""

    @staticmethod
    def test_inertia(state: NetworkState) -> None:
        """test Phi is the sum of squared 3D distances"""

        state.map_by_id(1).loc = np.array([50.0, 100.0, 0.0])
        state.ues[0].loc = np.array([53.0, 100.0])
        assert inertia(state, 1) == (pytest.approx(9.0), 1)

        state.ues[1].loc = np.array([50.0, 104.0])
        state.association = AssociationState(serving={0: 1, 1: 1}, beam_limits={0: INF, 1: 10})
        assert inertia(state, 1) == (pytest.approx(25.0), 2)

    @staticmethod
    def test_high_inertia(state: NetworkState) -> None:
        """test Phi above phi_max counts towards activation"""

        controller = TradeoffController(TradeoffConfig())
        track = controller.monitor(state, 2)
        assert track.inertia == pytest.approx(3 * 3600.0)
        assert track.inertia > 6e3
        assert track.served == 3
        assert track.theta == 1
        assert track.history == [1]

    @staticmethod
    def test_underloaded(state: NetworkState) -> None:
        """test fewer than k_min served UEs counts towards repatriation"""

        controller = TradeoffController(TradeoffConfig())
        track = controller.monitor(state, 1)
        assert track.served == 1
        assert track.theta == -1

    @staticmethod
    def test_idle_map_drains(state: NetworkState) -> None:
        """test a MAP serving nobody loses one per monitoring event"""

        state.association = AssociationState(serving={0: 2, 1: 2, 2: 2, 3: 2}, beam_limits={0: INF, 1: 10, 2: 10})
        controller = TradeoffController(TradeoffConfig())
        assert controller.monitor(state, 1).theta == -1
        track = controller.monitor(state, 1)
        assert track.theta == -2
        assert track.history == [-1, -2]
        assert track.served == 0

    @staticmethod
    def test_full_beams(state: NetworkState) -> None:
        """test a MAP using every beam counts towards activation"""

        state.map_by_id(2).beam_limit = 3
        controller = TradeoffController(TradeoffConfig(phi_max=1e9))
        assert controller.monitor(state, 2).theta == 1


class TestDecide:
    """Test TradeoffController.decide"""

    @staticmethod
    def test_activation(state: NetworkState) -> None:
        """test a positive mean deploys the lowest idle MAP next to the requester"""

        controller = TradeoffController(TradeoffConfig())
        with_history(controller, 2, [1, 2, 3])

        decisions = controller.decide(state, 10)
        assert decisions == [Activate(requester=2, map_id=3)]
        assert state.deployed == 3

        spawned = state.map_by_id(3).loc
        assert np.all(np.abs(spawned[:2] - np.array([150.0, 100.0])) <= 20.0)
        assert spawned[2] == pytest.approx(state.region.mid_height)

    @staticmethod
    def test_repatriation(state: NetworkState) -> None:
        """test a negative mean repatriates the MAP"""

        controller = TradeoffController(TradeoffConfig())
        with_history(controller, 1, [-1])

        assert controller.decide(state, 10) == [Repatriate(1)]
        assert state.active_ids == [2]

    @staticmethod
    def test_last_map_stays(state: NetworkState) -> None:
        """test the last active MAP refuses to leave"""

        controller = TradeoffController(TradeoffConfig())
        with_history(controller, 1, [-1])
        with_history(controller, 2, [-1])

        assert controller.decide(state, 10) == [Repatriate(1)]
        assert state.active_ids == [2]

        with_history(controller, 2, [-3])
        assert controller.decide(state, 20) == []
        assert state.active_ids == [2]

    @staticmethod
    def test_cap_on_active_maps(state: NetworkState) -> None:
        """test no activation once every MAP is deployed"""

        activate_map(state, 3, np.array([100.0, 100.0, 60.0]))
        controller = TradeoffController(TradeoffConfig())
        for i in (1, 2, 3):
            with_history(controller, i, [2])

        assert controller.decide(state, 10) == []
        assert state.deployed == 3

    @staticmethod
    def test_no_redeploy_in_same_round() -> None:
        """test a MAP repatriated in a round is not handed to a requester of the same round"""

        _state = build_scenario(ScenarioConfig(n_ue=2, max_maps=2))
        activate_map(_state, 1, np.array([50.0, 100.0, 60.0]))
        activate_map(_state, 2, np.array([150.0, 100.0, 60.0]))
        controller = TradeoffController(TradeoffConfig())
        with_history(controller, 1, [-1])
        with_history(controller, 2, [1])

        assert controller.decide(_state, 10) == [Repatriate(1)]
        assert _state.active_ids == [2]

    @staticmethod
    def test_off_period(state: NetworkState) -> None:
        """test nothing happens between decision rounds and the window is kept"""

        controller = TradeoffController(TradeoffConfig())
        with_history(controller, 2, [1, 2])

        assert controller.decide(state, 5) == []
        assert controller.maps[2].history == [1, 2]

        controller.decide(state, 10)
        assert all(track.history == [] and track.theta == 0 for track in controller.maps.values())

    @staticmethod
    def test_scripted_schedule(state: NetworkState) -> None:
        """test the slot by slot schedule of a fixed layout"""

        controller = TradeoffController(TradeoffConfig())
        schedule = {}
        for t in range(0, 21):
            schedule[t] = controller.decide(state, t)
            if t < 10:
                controller.monitor_all(state)
                assert controller.thetas() == {"1": -(t + 1), "2": t + 1}

        assert schedule[10] == [Repatriate(1), Activate(requester=2, map_id=3)]
        assert all(decisions == [] for t, decisions in schedule.items() if t != 10)
        assert state.active_ids == [2, 3]
        assert set(controller.maps) == {2}

    @staticmethod
    def test_decision_records() -> None:
        """test decisions serialise for the slot records"""

        assert Activate(2, 3).to_dict() == {"kind": "activate", "requester": 2, "map": 3}
        assert Repatriate(1).to_dict() == {"kind": "repatriate", "map": 1}
        assert Activate(2, 3) != Repatriate(3)


class TestSpawnLocation:
    """Test spawn_location"""

    @staticmethod
    def test_clipped() -> None:
        """test spawns near the border stay inside the region"""

        state = build_scenario(ScenarioConfig())
        rng = np.random.default_rng(0)
        for _ in range(50):
            loc = spawn_location(np.array([199.0, 1.0, 100.0]), state.region, rng, 20.0)
            assert state.region.contains(loc)
            assert loc[2] == pytest.approx(70.0)
