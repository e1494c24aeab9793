"""jobs"""

from __future__ import annotations
from typing import Any

from mapnet.errors import MapnetError


class EpisodeJob:
    """
    One evaluation episode to run

    Attributes
    ----------
    arm : `str`
        Label of the regime or comparison arm
    episode : `int`
        Episode index inside the arm
    seed : `int`
        Scenario seed, shared by every arm for the same episode index
    registry_dir : `str`
        Directory of the policy registry driving the MAPs
    initial_maps : `int`
        M_s(0)
    dynamic : `bool`
        Run the trade-off controller
    n_ue : `int`
        UEs of the scenario
    check : `bool`
        Assert the network constraints on every slot
    """

    arm: str
    episode: int
    seed: int
    registry_dir: str
    initial_maps: int
    dynamic: bool
    n_ue: int
    check: bool

    __slots__ = ("arm", "episode", "seed", "registry_dir", "initial_maps", "dynamic", "n_ue", "check")

    def __init__(
        self,
        arm: str,
        episode: int,
        seed: int,
        registry_dir: str,
        initial_maps: int,
        dynamic: bool = False,
        n_ue: int = 60,
        check: bool = False,
    ) -> None:
        self.arm = arm
        self.episode = episode
        self.seed = seed
        self.registry_dir = registry_dir
        self.initial_maps = initial_maps
        self.dynamic = dynamic
        self.n_ue = n_ue
        self.check = check

    def __repr__(self) -> str:
        return f"EpisodeJob(arm={self.arm!r}, episode={self.episode}, seed={self.seed})"


class EpisodeResult:
    """
    Slot rows of a finished episode with its wall time
    """

    arm: str
    episode: int
    rows: list[dict[str, Any]]
    service_time_seconds: float
    error: MapnetError | None

    __slots__ = ("arm", "episode", "rows", "service_time_seconds", "error")

    def __init__(
        self,
        arm: str,
        episode: int,
        rows: list[dict[str, Any]],
        service_time_seconds: float,
        error: MapnetError | None = None,
    ) -> None:
        self.arm = arm
        self.episode = episode
        self.rows = rows
        self.service_time_seconds = service_time_seconds
        self.error = error

    @property
    def mean_sum_rate(self) -> float:
        if not self.rows:
            return 0.0
        return sum(row["sum_rate"] for row in self.rows) / len(self.rows)
