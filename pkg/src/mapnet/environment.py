"""environment"""

from __future__ import annotations
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any
import logging

import numpy as np

from mapnet.config import MapnetConfig, ScenarioConfig
from mapnet.errors import ScenarioError
from mapnet.network import assert_constraints, configure_slot
from mapnet.observation import Observation, build_observation
from mapnet.placement import apply_action, assign_targets, centroid_targets, reward
from mapnet.policy import PlacementPolicy, act
from mapnet.radio import ChannelModel
from mapnet.scenario import NetworkState, build_scenario, deploy_maps, step_mobility
from mapnet.tradeoff import TradeoffController


logger = logging.getLogger(__name__)

PolicySelector = Callable[[NetworkState], dict[int, PlacementPolicy]]


@dataclass
class Transition:
    """One agent step of the slot: what MAP `map_id` saw, did and earned"""

    map_id: int
    observation: Observation
    action: int
    log_prob: float
    value: float
    reward: float = 0.0
    distance: float = 0.0


@dataclass
class SlotResult:
    """
    Outcome of one slot.

    Attributes
    ----------
    t : `int`
    deployed : `int`
        M_s(t) after the decision round
    connected : `int`
        Unblocked UEs
    sum_rate : `float`
        R(t) in bps
    transitions : `list[Transition]`
        One per active MAP, ascending id
    decisions : `list[dict[str, Any]]`
        Trade-off decisions taken at the start of the slot
    thetas : `dict[str, int]`
        Trade-off counters after monitoring
    """

    t: int
    deployed: int
    connected: int
    sum_rate: float
    transitions: list[Transition] = field(default_factory=list)
    decisions: list[dict[str, Any]] = field(default_factory=list)
    thetas: dict[str, int] = field(default_factory=dict)

    @property
    def mean_reward(self) -> float | None:
        if not self.transitions:
            return None
        return float(np.mean([tr.reward for tr in self.transitions]))


class NetworkSimulation:
    """
    Slot loop shared by training and evaluation. Every slot runs, in order: the trade-off decision round, the moves
    of the active MAPs (observations are taken before any MAP moves), the network configuration, local monitoring,
    the optional constraint assertion, the placement rewards and the UE mobility step.

    Attributes
    ----------
    config : `MapnetConfig`
    state : `NetworkState`
    channel : `ChannelModel`
    selector : `PolicySelector`
        Maps the active MAPs of a state to their policies; called whenever the active set changes
    controller : `TradeoffController | None`
        Dynamic MAP management, `None` keeps M_s fixed
    rewards : `bool`
        Compute placement rewards (centroid clustering every time the UEs change)
    mode : `str`
        `sample` or `greedy` action selection
    check : `bool`
        Assert C1-C8 after every slot

    Methods
    -------
    new(config, scenario, initial_maps, selector, ...) -> NetworkSimulation
        Build the scenario and deploy the initial MAPs
    step() -> SlotResult
        Run one slot
    run(slots) -> list[SlotResult]
        Run `slots` slots (the scenario's slot count by default)
    """

    config: MapnetConfig
    state: NetworkState
    channel: ChannelModel
    selector: PolicySelector
    controller: TradeoffController | None
    rewards: bool
    mode: str
    check: bool
    policies: dict[int, PlacementPolicy]

    def __init__(
        self,
        config: MapnetConfig,
        state: NetworkState,
        selector: PolicySelector,
        controller: TradeoffController | None = None,
        rewards: bool = True,
        mode: str = "sample",
        check: bool = False,
    ) -> None:
        self.config = config
        self.state = state
        self.channel = ChannelModel(config.radio)
        self.selector = selector
        self.controller = controller
        self.rewards = rewards
        self.mode = mode
        self.check = check
        self.policies = {}
        self._centroids: tuple[tuple[int, int], np.ndarray] | None = None

    @classmethod
    def new(
        cls,
        config: MapnetConfig,
        scenario: ScenarioConfig,
        initial_maps: int,
        selector: PolicySelector,
        controller: TradeoffController | None = None,
        rewards: bool = True,
        mode: str = "sample",
        check: bool = False,
    ) -> NetworkSimulation:
        """
        Factory method building the scenario and deploying `initial_maps` MAPs at random locations.

        Parameters
        ----------
        config : `MapnetConfig`
            Radio, placement and trade-off settings
        scenario : `ScenarioConfig`
            World of this episode
        initial_maps : `int`
            M_s(0)

        Returns
        -------
        `NetworkSimulation`
        """

        state = build_scenario(scenario)
        deploy_maps(state, initial_maps)
        return cls(config, state, selector, controller=controller, rewards=rewards, mode=mode, check=check)

    def _assign_policies(self) -> None:
        if sorted(self.policies) != self.state.active_ids:
            self.policies = self.selector(self.state)

    def targets(self) -> dict[int, np.ndarray]:
        """Current placement targets; centroids are recomputed only when the UEs or M_s changed"""

        state = self.state
        key = (state.ue_version, state.deployed)
        if self._centroids is None or self._centroids[0] != key:
            seed = int(np.random.SeedSequence([state.config.seed, *key]).generate_state(1)[0])
            placement = self.config.placement
            lifted = centroid_targets(
                state, altitude_m=placement.training_altitude_m, max_iter=placement.kmeans_max_iter, seed=seed
            )
            self._centroids = (key, lifted)
        return assign_targets(state, self._centroids[1])

    def _rewards(self, transitions: list[Transition]) -> None:
        state = self.state
        try:
            targets = self.targets()
        except ScenarioError:
            logger.debug("slot %d: no unblocked UE, rewards are zero", state.t)
            return

        placement = self.config.placement
        capacities = state.report.backhaul_capacity if state.report is not None else {}
        for tr in transitions:
            d_i = float(np.linalg.norm(state.map_by_id(tr.map_id).loc - targets[tr.map_id]))
            tr.distance = d_i
            tr.reward = reward(d_i, placement.d0, capacities.get(tr.map_id, 0.0), placement.cap_scale)

    def step(self) -> SlotResult:
        state = self.state
        t = state.t

        decisions = []
        if self.controller is not None:
            decisions = [d.to_dict() for d in self.controller.decide(state, t)]

        self._assign_policies()
        state.snapshot_locations()

        placement = self.config.placement
        transitions: list[Transition] = []
        for i in state.active_ids:
            obs = build_observation(state, i, placement.n_ue_obs, placement.n_map_obs, placement.demand_norm_gbps)
            action, log_prob, value = act(self.policies[i], obs, self.mode, state.streams.policy)
            transitions.append(Transition(i, obs, int(action), log_prob, value))

        for tr in transitions:
            apply_action(state, tr.map_id, tr.action)

        report = configure_slot(state, self.channel, self.config.radio)
        if self.controller is not None:
            self.controller.monitor_all(state)

        if self.check:
            assert_constraints(state)

        if self.rewards and transitions:
            self._rewards(transitions)

        result = SlotResult(
            t=t,
            deployed=state.deployed,
            connected=state.connected,
            sum_rate=report.sum_rate,
            transitions=transitions,
            decisions=decisions,
            thetas=self.controller.thetas() if self.controller is not None else {},
        )

        step_mobility(state)
        return result

    def run(self, slots: int | None = None) -> list[SlotResult]:
        slots = self.state.config.slot_count if slots is None else slots
        return [self.step() for _ in range(slots)]
