"""scenario"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import TYPE_CHECKING
import logging

import numpy as np

from mapnet.config import ScenarioConfig
from mapnet.errors import InactiveMapError, ScenarioError
from mapnet.geometry import Region

if TYPE_CHECKING:
    from mapnet.network import AssociationState, BackhaulAllocation, RateReport
    from mapnet.radio import LinkTable


logger = logging.getLogger(__name__)

GBPS = 1e9
DONOR_ID = 0


@dataclass
class RandomStreams:
    """
    Independent random streams of one scenario. Paired runs built from the same seed share the `mobility` stream,
    whatever the other streams consume.
    """

    mobility: np.random.Generator
    channel: np.random.Generator
    control: np.random.Generator
    policy: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> RandomStreams:
        mobility, channel, control, policy = np.random.SeedSequence(seed).spawn(4)
        return cls(
            mobility=np.random.default_rng(mobility),
            channel=np.random.default_rng(channel),
            control=np.random.default_rng(control),
            policy=np.random.default_rng(policy),
        )


@dataclass(slots=True)
class UserEquipment:
    """
    A grounded UE.

    Attributes
    ----------
    id : `int`
    loc : `np.ndarray`
        2D ground location
    demand_bps : `float`
        Traffic request D_j
    blocked : `bool`
        Blocked UEs are disconnected: no association, invisible to observations and clustering
    waypoint : `np.ndarray`
        2D mobility target
    speed : `float`
        m/s
    group : `int`
        Mobility group sharing a waypoint centroid
    """

    id: int
    loc: np.ndarray
    demand_bps: float
    blocked: bool
    waypoint: np.ndarray
    speed: float
    group: int = 0

    @property
    def loc3d(self) -> np.ndarray:
        return np.array([self.loc[0], self.loc[1], 0.0])


@dataclass(slots=True)
class MapNode:
    """
    An aerial mobile access point. `active` is the backhaul association variable z_i.
    """

    id: int
    loc: np.ndarray
    active: bool
    beam_limit: int
    policy_id: str | None = None


@dataclass(slots=True)
class DonorNode:
    """The fixed IAB donor, BS 0, with unbounded beams"""

    loc: np.ndarray
    id: int = DONOR_ID

    @property
    def beam_limit(self) -> float:
        return float("inf")


@dataclass
class NetworkState:
    """
    Every node and the network configuration of one time slot. The slot pipeline of `mapnet.network` fills
    `links`, `association`, `allocation` and `report`.

    Attributes
    ----------
    config : `ScenarioConfig`
    donor : `DonorNode`
    ues : `list[UserEquipment]`
    maps : `list[MapNode]`
        All M MAPs, ids 1..M, active or not
    group_waypoints : `np.ndarray`
        Shared waypoint of every mobility group, shape (groups, 2)
    streams : `RandomStreams`
    t : `int`
        Current slot
    previous_locations : `dict[int, np.ndarray]`
        Location of each active MAP at the start of the current slot's move (C8)
    """

    config: ScenarioConfig
    donor: DonorNode
    ues: list[UserEquipment]
    maps: list[MapNode]
    group_waypoints: np.ndarray
    streams: RandomStreams
    t: int = 0
    previous_locations: dict[int, np.ndarray] = field(default_factory=dict)
    ue_version: int = 0
    links: LinkTable | None = None
    association: AssociationState | None = None
    allocation: BackhaulAllocation | None = None
    report: RateReport | None = None

    @property
    def region(self) -> Region:
        return self.config.region

    @property
    def active_maps(self) -> list[MapNode]:
        return [m for m in self.maps if m.active]

    @property
    def active_ids(self) -> list[int]:
        return [m.id for m in self.maps if m.active]

    @property
    def deployed(self) -> int:
        """M_s(t)"""

        return sum(1 for m in self.maps if m.active)

    @property
    def bs_ids(self) -> list[int]:
        """Donor then active MAPs in ascending id"""

        return [DONOR_ID] + self.active_ids

    @property
    def connected(self) -> int:
        return sum(1 for u in self.ues if not u.blocked)

    def map_by_id(self, map_id: int) -> MapNode:
        for m in self.maps:
            if m.id == map_id:
                return m
        raise ScenarioError(f"no MAP with id {map_id}")

    def active_map(self, map_id: int) -> MapNode:
        node = self.map_by_id(map_id)
        if not node.active:
            raise InactiveMapError(f"MAP {map_id} is not deployed")
        return node

    def bs_location(self, bs_id: int) -> np.ndarray:
        if bs_id == DONOR_ID:
            return self.donor.loc
        return self.map_by_id(bs_id).loc

    def beam_limit(self, bs_id: int) -> float:
        if bs_id == DONOR_ID:
            return self.donor.beam_limit
        return float(self.map_by_id(bs_id).beam_limit)

    def ue_locations(self) -> np.ndarray:
        """Ground locations of every UE, shape (K, 2)"""

        return np.array([u.loc for u in self.ues]).reshape(len(self.ues), 2)

    def unblocked(self) -> list[UserEquipment]:
        return [u for u in self.ues if not u.blocked]

    def snapshot_locations(self) -> None:
        """Remember where every active MAP stands before this slot's move"""

        self.previous_locations = {m.id: m.loc.copy() for m in self.maps if m.active}


def sample_demand(rng: np.random.Generator, mean_gbps: float, size: int | None = None) -> np.ndarray | float:
    """
    Draw traffic demand in bps: a Poisson count of mean `mean_gbps` times 1 Gbps.

    Parameters
    ----------
    rng : `np.random.Generator`
    mean_gbps : `float`
        Mean k of the Poisson law, in Gbps
    size : `int | None`
        Number of draws, `None` draws a scalar

    Returns
    -------
    `np.ndarray | float`
    """

    if mean_gbps <= 0:
        raise ScenarioError("demand mean should be positive")

    counts = rng.poisson(mean_gbps, size=size)
    if size is None:
        return float(counts) * GBPS
    return counts.astype(float) * GBPS


def build_scenario(config: ScenarioConfig) -> NetworkState:
    """
    Build the world at t = 0: UEs uniform on the footprint, donor at its fixed location and no MAP deployed.

    Parameters
    ----------
    config : `ScenarioConfig`

    Returns
    -------
    `NetworkState`
    """

    config_errors = config.validate()
    if config_errors is not None:
        raise ScenarioError("; ".join(str(e) for e in config_errors))

    streams = RandomStreams.from_seed(config.seed)
    rng = streams.mobility
    region = config.region

    groups = min(config.mobility_groups, config.n_ue)
    group_waypoints = region.uniform_ground(rng, groups)
    locations = region.uniform_ground(rng, config.n_ue)
    demands = sample_demand(rng, config.demand_mean_gbps, size=config.n_ue)
    blocked = rng.random(config.n_ue) < config.blockage_prob

    ues: list[UserEquipment] = []
    for j in range(config.n_ue):
        group = j % groups
        ues.append(
            UserEquipment(
                id=j,
                loc=locations[j],
                demand_bps=float(demands[j]),  # type: ignore[index]
                blocked=bool(blocked[j]),
                waypoint=_personal_waypoint(group_waypoints[group], config, rng),
                speed=config.ue_speed,
                group=group,
            )
        )

    maps = [
        MapNode(id=i, loc=region.lower.copy(), active=False, beam_limit=config.map_beam_limit)
        for i in range(1, config.max_maps + 1)
    ]

    logger.debug("built scenario seed=%d with %d UEs and %d MAP slots", config.seed, config.n_ue, config.max_maps)
    return NetworkState(
        config=config,
        donor=DonorNode(loc=np.array(config.donor_location, dtype=float)),
        ues=ues,
        maps=maps,
        group_waypoints=group_waypoints,
        streams=streams,
    )


def _personal_waypoint(group_waypoint: np.ndarray, config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    offset = rng.normal(0.0, config.mobility_jitter_m, size=2) if config.mobility_jitter_m > 0 else np.zeros(2)
    return config.region.clip_ground(group_waypoint + offset)


def step_mobility(state: NetworkState, dt: int = 1) -> NetworkState:
    """
    Advance the UEs by `dt` slots. Every UE walks straight to its waypoint; once every member of a group has arrived
    the group draws a new shared waypoint and each member a new personal waypoint around it. Blockage flags are
    redrawn on every blockage epoch boundary.

    Parameters
    ----------
    state : `NetworkState`
        Updated in place
    dt : `int = 1`
        Slots to advance

    Returns
    -------
    `NetworkState`
    """

    config = state.config
    rng = state.streams.mobility
    moved = False
    for _ in range(dt):
        arrived: dict[int, bool] = {}
        for ue in state.ues:
            step = ue.speed * config.slot_duration_s
            heading = ue.waypoint - ue.loc
            remaining = float(np.linalg.norm(heading))
            if remaining <= step:
                if remaining > 0:
                    moved = True
                ue.loc = ue.waypoint.copy()
                arrived[ue.group] = arrived.get(ue.group, True)
            else:
                ue.loc = config.region.clip_ground(ue.loc + heading * (step / remaining))
                arrived[ue.group] = False
                moved = moved or step > 0

        for group, done in sorted(arrived.items()):
            if not done:
                continue
            state.group_waypoints[group] = config.region.uniform_ground(rng, 1)[0]
            for ue in state.ues:
                if ue.group == group:
                    ue.waypoint = _personal_waypoint(state.group_waypoints[group], config, rng)

        state.t += 1
        if state.t % config.blockage_epoch == 0:
            blocked = rng.random(len(state.ues)) < config.blockage_prob
            for ue, flag in zip(state.ues, blocked):
                moved = moved or ue.blocked != bool(flag)
                ue.blocked = bool(flag)

    if moved:
        state.ue_version += 1

    return state


def activate_map(state: NetworkState, map_id: int, loc: np.ndarray) -> MapNode:
    """Deploy MAP `map_id` at `loc` (clipped to the region); C8 starts being tracked from its next move"""

    node = state.map_by_id(map_id)
    node.active = True
    node.loc = state.region.clip(np.asarray(loc, dtype=float))
    state.previous_locations.pop(map_id, None)
    return node


def deactivate_map(state: NetworkState, map_id: int) -> MapNode:
    """Repatriate MAP `map_id`"""

    node = state.map_by_id(map_id)
    node.active = False
    node.policy_id = None
    state.previous_locations.pop(map_id, None)
    return node


def deploy_maps(state: NetworkState, count: int, rng: np.random.Generator | None = None) -> list[int]:
    """
    Activate the `count` lowest id inactive MAPs at uniform random locations inside the region.

    Returns
    -------
    `list[int]`
        Ids of the deployed MAPs
    """

    rng = state.streams.control if rng is None else rng
    idle = [m.id for m in state.maps if not m.active]
    if count > len(idle):
        raise ScenarioError(f"cannot deploy {count} MAPs, only {len(idle)} idle")

    chosen = idle[:count]
    locations = state.region.uniform(rng, count)
    for map_id, loc in zip(chosen, locations):
        activate_map(state, map_id, loc)

    return chosen
