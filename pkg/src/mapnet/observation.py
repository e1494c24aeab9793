"""observation"""

from __future__ import annotations
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from mapnet.scenario import GBPS

if TYPE_CHECKING:
    from mapnet.scenario import NetworkState


UE_FEATURES = 4
MAP_FEATURES = 3
SELF_FEATURES = 3


@dataclass
class Observation:
    """
    Fixed shape partial observation of one MAP. Rows are sorted nearest first; unused rows are zero with mask 0.

    Attributes
    ----------
    ue_block : `np.ndarray`
        (n_ue, 4): dx / X, dy / Y, -z / H, demand / demand_norm
    ue_mask : `np.ndarray`
        (n_ue,) 1 for a real UE row
    map_block : `np.ndarray`
        (n_map, 3): dx / X, dy / Y, dz / Z of the neighbour MAPs
    map_mask : `np.ndarray`
        (n_map,)
    self_block : `np.ndarray`
        (3,) own location relative to the lower corner of the region, divided by its extents
    """

    ue_block: np.ndarray
    ue_mask: np.ndarray
    map_block: np.ndarray
    map_mask: np.ndarray
    self_block: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.ue_block.shape[0], self.map_block.shape[0]

    def equals(self, other: Observation) -> bool:
        return all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ("ue_block", "ue_mask", "map_block", "map_mask", "self_block")
        )


def build_observation(
    state: NetworkState, i: int, n_ue: int = 15, n_map: int = 5, demand_norm_gbps: float = 10.0
) -> Observation:
    """
    Observation of active MAP `i`: its `n_ue` nearest unblocked UEs and `n_map` nearest other active MAPs by 3D
    distance, coordinates relative to the MAP. Ties keep the lower id first.

    Parameters
    ----------
    state : `NetworkState`
    i : `int`
        MAP id
    n_ue, n_map : `int = 15, 5`
        Rows of the UE and MAP blocks
    demand_norm_gbps : `float = 10`
        Demand of a full UE feature, larger demands are clipped

    Returns
    -------
    `Observation`
    """

    node = state.active_map(i)
    region = state.region
    extents = region.extents
    horizontal = extents[:2]

    ue_block = np.zeros((n_ue, UE_FEATURES))
    ue_mask = np.zeros(n_ue)
    ues = state.unblocked()
    if ues:
        rel = np.array([u.loc3d - node.loc for u in ues])
        order = np.lexsort((np.array([u.id for u in ues]), np.linalg.norm(rel, axis=1)))[:n_ue]
        for row, k in enumerate(order):
            ue_block[row, :2] = rel[k, :2] / horizontal
            ue_block[row, 2] = rel[k, 2] / region.h_max
            ue_block[row, 3] = min(ues[k].demand_bps / (demand_norm_gbps * GBPS), 1.0)
            ue_mask[row] = 1.0

    map_block = np.zeros((n_map, MAP_FEATURES))
    map_mask = np.zeros(n_map)
    others = [m for m in state.active_maps if m.id != i]
    if others:
        rel = np.array([m.loc - node.loc for m in others])
        order = np.lexsort((np.array([m.id for m in others]), np.linalg.norm(rel, axis=1)))[:n_map]
        for row, k in enumerate(order):
            map_block[row] = rel[k] / extents
            map_mask[row] = 1.0

    return Observation(
        ue_block=ue_block,
        ue_mask=ue_mask,
        map_block=map_block,
        map_mask=map_mask,
        self_block=(node.loc - region.lower) / extents,
    )
