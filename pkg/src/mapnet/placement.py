"""placement"""

from __future__ import annotations
from enum import IntEnum
from typing import TYPE_CHECKING
import logging
import warnings

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from mapnet.errors import ScenarioError

if TYPE_CHECKING:
    from mapnet.scenario import NetworkState


logger = logging.getLogger(__name__)


class Action(IntEnum):
    FORWARD = 0
    BACKWARD = 1
    UP = 2
    DOWN = 3
    LEFT = 4
    RIGHT = 5
    HOVER = 6


N_ACTIONS = len(Action)

_DIRECTIONS = {
    Action.FORWARD: np.array([0.0, 1.0, 0.0]),
    Action.BACKWARD: np.array([0.0, -1.0, 0.0]),
    Action.UP: np.array([0.0, 0.0, 1.0]),
    Action.DOWN: np.array([0.0, 0.0, -1.0]),
    Action.LEFT: np.array([-1.0, 0.0, 0.0]),
    Action.RIGHT: np.array([1.0, 0.0, 0.0]),
    Action.HOVER: np.zeros(3),
}


def displacement(action: Action | int, step_m: float) -> np.ndarray:
    return _DIRECTIONS[Action(action)] * step_m


def apply_action(state: NetworkState, i: int, action: Action | int, step_m: float | None = None) -> np.ndarray:
    """
    Move active MAP `i` one step along `action`. The result is clipped to the region, so the move never leaves the
    box and never exceeds the step length.

    Parameters
    ----------
    state : `NetworkState`
        Updated in place
    i : `int`
        MAP id
    action : `Action | int`
    step_m : `float | None`
        Step length, the scenario's `max_step_m` by default

    Returns
    -------
    `np.ndarray`
        New location
    """

    node = state.active_map(i)
    step = state.config.max_step_m if step_m is None else step_m
    node.loc = state.region.clip(node.loc + displacement(action, step))
    return node.loc


def kmeans_centroids(points: np.ndarray, k: int, seed: int, max_iter: int = 50) -> tuple[np.ndarray, float]:
    """
    k-means++ seeded Lloyd iterations.

    Returns
    -------
    `tuple[np.ndarray, float]`
        Centroids, shape (k, dim), and the within-cluster sum of squares
    """

    model = KMeans(n_clusters=k, init="k-means++", n_init=1, max_iter=max_iter, random_state=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        model.fit(points)
    return model.cluster_centers_, float(model.inertia_)


def match_targets(locations: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """
    Unique minimum total distance matching of targets to locations. Locations left over when there are fewer
    targets than locations take their nearest target.

    Returns
    -------
    `np.ndarray`
        Index of the target of every location
    """

    cost = cdist(locations, targets)
    rows, cols = linear_sum_assignment(cost)
    assigned = np.argmin(cost, axis=1)
    assigned[rows] = cols
    return assigned


def centroid_targets(
    state: NetworkState, k: int | None = None, altitude_m: float = 60.0, max_iter: int = 50, seed: int = 0
) -> np.ndarray:
    """
    Centroids of the unblocked UEs lifted to `altitude_m`.

    Parameters
    ----------
    state : `NetworkState`
    k : `int | None`
        Clusters, M_s(t) by default; reduced to the number of unblocked UEs
    altitude_m : `float = 60`
    max_iter : `int = 50`
    seed : `int = 0`
        Seed of the k-means++ initialisation

    Returns
    -------
    `np.ndarray`
        Shape (k, 3), empty when no MAP is active
    """

    ues = state.unblocked()
    if not ues:
        raise ScenarioError("no unblocked UE to cluster")

    active = state.active_maps
    if not active:
        return np.zeros((0, 3))

    k = len(active) if k is None else k
    if k < 1:
        raise ScenarioError("at least one cluster is needed")

    points = np.array([u.loc for u in ues])
    distinct = len(np.unique(points, axis=0))
    if k > distinct:
        logger.debug("reducing clusters from %d to %d distinct UE locations", k, distinct)
        k = distinct

    centroids, _ = kmeans_centroids(points, k, seed, max_iter)
    return np.column_stack([centroids, np.full(k, altitude_m)])


def assign_targets(state: NetworkState, targets: np.ndarray) -> dict[int, np.ndarray]:
    """Match `targets` to the active MAPs, MAP id -> 3D target"""

    active = state.active_maps
    if not active or len(targets) == 0:
        return {}

    assigned = match_targets(np.array([m.loc for m in active]), targets)
    return {m.id: targets[assigned[n]] for n, m in enumerate(active)}


def target_locations(
    state: NetworkState, k: int | None = None, altitude_m: float = 60.0, max_iter: int = 50, seed: int = 0
) -> dict[int, np.ndarray]:
    """
    Training target of every active MAP: centroids of the unblocked UEs lifted to `altitude_m` (see
    `centroid_targets`), matched to the MAPs by minimum total distance.

    Returns
    -------
    `dict[int, np.ndarray]`
        MAP id -> 3D target
    """

    return assign_targets(state, centroid_targets(state, k, altitude_m, max_iter, seed))


def reward(d_i: float, d0: float, c_backhaul: float, cap_scale: float = 1e-9) -> float:
    """
    Placement reward: the negative distance to the target while farther than `d0`, the scaled backhaul capacity
    minus `d0` once within it (inclusive).

    Parameters
    ----------
    d_i : `float`
        Distance to the target in meters
    d0 : `float`
        Reference distance
    c_backhaul : `float`
        Backhaul capacity in bps
    cap_scale : `float = 1e-9`
        bps to reward units

    Returns
    -------
    `float`
    """

    delta = 1.0 if d_i <= d0 else 0.0
    return (delta - 1.0) * d_i + delta * (cap_scale * c_backhaul - d0)
