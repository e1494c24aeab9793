"""tradeoff"""

from __future__ import annotations
from typing import TYPE_CHECKING, Any
import logging
import math

import numpy as np

from mapnet.config import TradeoffConfig
from mapnet.geometry import Region
from mapnet.scenario import activate_map, deactivate_map

if TYPE_CHECKING:
    from mapnet.scenario import NetworkState


logger = logging.getLogger(__name__)


class Activate:
    """
    MAP `requester` asked for support and MAP `map_id` was deployed next to it
    """

    requester: int
    map_id: int

    __slots__ = ("requester", "map_id")

    def __init__(self, requester: int, map_id: int) -> None:
        self.requester = requester
        self.map_id = map_id

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Activate) and (self.requester, self.map_id) == (other.requester, other.map_id)

    def __repr__(self) -> str:
        return f"Activate(requester={self.requester}, map_id={self.map_id})"

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "activate", "requester": self.requester, "map": self.map_id}


class Repatriate:
    """
    MAP `map_id` left the network
    """

    map_id: int

    __slots__ = ("map_id",)

    def __init__(self, map_id: int) -> None:
        self.map_id = map_id

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Repatriate) and self.map_id == other.map_id

    def __repr__(self) -> str:
        return f"Repatriate(map_id={self.map_id})"

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "repatriate", "map": self.map_id}


Decision = Activate | Repatriate


class MapTradeoff:
    """
    Local monitoring state of one MAP.

    Attributes
    ----------
    theta : `int`
        Signed trade-off counter
    history : `list[int]`
        Samples of `theta` since the last reset
    inertia : `float`
        Sum of squared 3D distances to the served UEs (m^2)
    served : `int`
        Beams in use
    """

    theta: int
    history: list[int]
    inertia: float
    served: int

    __slots__ = ("theta", "history", "inertia", "served")

    def __init__(self) -> None:
        self.theta = 0
        self.history = []
        self.inertia = 0.0
        self.served = 0

    @property
    def mean(self) -> float:
        """Arithmetic mean of the samples since the last reset, 0 without samples"""

        if not self.history:
            return 0.0
        return float(np.mean(self.history))

    def reset(self) -> None:
        self.theta = 0
        self.history = []


def initial_map_count(n_ue: int, mean_beams: float, max_maps: int) -> int:
    """
    MAPs enabled at t = 0: ceil(K / E[K_i]) clamped to [1, M].

    Parameters
    ----------
    n_ue : `int`
        K(t)
    mean_beams : `float`
        E_i[K_i]
    max_maps : `int`
        M

    Returns
    -------
    `int`
    """

    if mean_beams <= 0:
        raise ValueError("mean_beams should be positive")

    return min(max(math.ceil(n_ue / mean_beams), 1), max_maps)


def spawn_location(requester: np.ndarray, region: Region, rng: np.random.Generator, offset_m: float) -> np.ndarray:
    """
    Location of a newly activated MAP: the requester's horizontal position plus a uniform offset in
    [-offset_m, offset_m] per axis, at the middle of the altitude band, clipped to the region.
    """

    shift = rng.uniform(-offset_m, offset_m, size=2)
    return region.clip(np.array([requester[0] + shift[0], requester[1] + shift[1], region.mid_height]))


def inertia(state: NetworkState, i: int) -> tuple[float, int]:
    """Phi_i and the number of UEs served by MAP `i`"""

    node = state.active_map(i)
    if state.association is None:
        return 0.0, 0

    served = state.association.served(i)
    phi = sum(float(np.sum((state.ues[j].loc3d - node.loc) ** 2)) for j in served)
    return phi, len(served)


class TradeoffController:
    """
    Decentralized trade-off controller. Every MAP monitors its own served UEs and updates its counter; on every
    decision round a MAP with a positive mean asks for a new MAP and a MAP with a negative mean leaves.

    Attributes
    ----------
    cfg : `TradeoffConfig`
    maps : `dict[int, MapTradeoff]`
        Monitoring state of every MAP monitored since the last reset

    Methods
    -------
    monitor(state, i) -> MapTradeoff
        Local monitoring of MAP `i` in the current slot
    monitor_all(state)
        Monitor every active MAP
    decide(state, t) -> list[Decision]
        Decision round of slot `t`, applied to `state`
    """

    cfg: TradeoffConfig
    maps: dict[int, MapTradeoff]

    def __init__(self, cfg: TradeoffConfig) -> None:
        self.cfg = cfg
        self.maps = {}

    def tracker(self, i: int) -> MapTradeoff:
        return self.maps.setdefault(i, MapTradeoff())

    def monitor(self, state: NetworkState, i: int) -> MapTradeoff:
        """
        Update the counter of active MAP `i` from the inertia and the load of the current slot.

        Parameters
        ----------
        state : `NetworkState`
            Slot state with its association configured
        i : `int`
            MAP id

        Returns
        -------
        `MapTradeoff`
        """

        phi, served = inertia(state, i)
        track = self.tracker(i)
        track.inertia = phi
        track.served = served

        if served == 0:
            # one decrement stands for both low inertia and underload
            track.theta -= 1
            track.history.append(track.theta)
            return track

        if phi > self.cfg.phi_max:
            track.theta += 1
        elif phi < self.cfg.phi_min:
            track.theta -= 1

        if served >= state.beam_limit(i):
            track.theta += 1
        elif served < self.cfg.k_min:
            track.theta -= 1

        track.history.append(track.theta)
        return track

    def monitor_all(self, state: NetworkState) -> None:
        for i in state.active_ids:
            self.monitor(state, i)

    def thetas(self) -> dict[str, int]:
        return {str(i): track.theta for i, track in sorted(self.maps.items())}

    def decide(self, state: NetworkState, t: int) -> list[Decision]:
        """
        Decision round. Requests are handled in ascending MAP id: a negative mean repatriates the MAP (the last
        active MAP stays when `keep_one_map`), a positive mean deploys the lowest id idle MAP next to the requester.
        MAPs repatriated in this round are not redeployed in the same round. Counters are reset on every reset
        period boundary.

        Parameters
        ----------
        state : `NetworkState`
            Updated in place
        t : `int`
            Current slot

        Returns
        -------
        `list[Decision]`
        """

        decisions: list[Decision] = []
        if t % self.cfg.decision_period == 0:
            repatriated: set[int] = set()
            for i in list(state.active_ids):
                track = self.maps.get(i)
                if track is None or not track.history:
                    continue

                mean = track.mean
                if mean < 0:
                    if self.cfg.keep_one_map and state.deployed <= 1:
                        logger.debug("slot %d: MAP %d is the last active MAP, repatriation refused", t, i)
                        continue
                    deactivate_map(state, i)
                    repatriated.add(i)
                    decisions.append(Repatriate(i))
                    logger.debug("slot %d: MAP %d repatriates (mean theta %.2f)", t, i, mean)

                elif mean > 0:
                    idle = [m.id for m in state.maps if not m.active and m.id not in repatriated]
                    if not idle or state.deployed >= state.config.max_maps:
                        logger.warning("slot %d: MAP %d requested support but no MAP is available", t, i)
                        continue
                    requester = state.active_map(i).loc
                    loc = spawn_location(requester, state.region, state.streams.control, self.cfg.spawn_offset_m)
                    activate_map(state, idle[0], loc)
                    decisions.append(Activate(i, idle[0]))
                    logger.debug("slot %d: MAP %d activates MAP %d (mean theta %.2f)", t, i, idle[0], mean)

        if t % self.cfg.reset_period == 0:
            self.reset(state)

        return decisions

    def reset(self, state: NetworkState | None = None) -> None:
        """Zero every counter; MAPs no longer active are forgotten"""

        if state is not None:
            active = set(state.active_ids)
            self.maps = {i: track for i, track in self.maps.items() if i in active}
        for track in self.maps.values():
            track.reset()
