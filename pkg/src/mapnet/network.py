"""network"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import TYPE_CHECKING
import logging

import numpy as np

from mapnet.config import RadioConfig
from mapnet.errors import ConstraintViolationError
from mapnet.radio import (
    ChannelModel,
    access_beams,
    access_budget,
    access_capacity,
    backhaul_capacity,
    backhaul_sinr,
    snr_matrix,
)

if TYPE_CHECKING:
    from mapnet.scenario import NetworkState


logger = logging.getLogger(__name__)

DONOR_ID = 0
_TOL = 1e-9


@dataclass
class AssociationState:
    """
    UE association x_{i,j}, stored as the serving BS of every associated UE.

    Attributes
    ----------
    serving : `dict[int, int]`
        UE id -> BS id; unassociated UEs are absent
    beam_limits : `dict[int, float]`
        K_i of every BS that was a candidate (donor is unbounded)
    """

    serving: dict[int, int] = field(default_factory=dict)
    beam_limits: dict[int, float] = field(default_factory=dict)

    def serving_bs(self, j: int) -> int | None:
        return self.serving.get(j)

    def x(self, i: int, j: int) -> int:
        return 1 if self.serving.get(j) == i else 0

    def served(self, i: int) -> list[int]:
        """UE ids served by BS `i`, ascending"""

        return sorted(j for j, bs in self.serving.items() if bs == i)

    @property
    def served_count(self) -> dict[int, int]:
        counts = {bs: 0 for bs in self.beam_limits}
        for bs in self.serving.values():
            counts[bs] = counts.get(bs, 0) + 1
        return counts


@dataclass
class BackhaulAllocation:
    """Backhaul fractions beta_{i,j} of every MAP to its UEs"""

    beta: dict[tuple[int, int], float] = field(default_factory=dict)

    def total(self, i: int) -> float:
        return sum(b for (bs, _), b in self.beta.items() if bs == i)

    def of(self, i: int, j: int) -> float:
        return self.beta.get((i, j), 0.0)


@dataclass
class RateReport:
    """
    Rates of one slot.

    Attributes
    ----------
    gamma : `dict[tuple[int, int], float]`
        Effective access demand min(D_j, C^(a)) of every associated pair
    rate : `dict[tuple[int, int], float]`
        Effective rate R_{i,j}
    access_sinr, access_capacity : `dict[tuple[int, int], float]`
    backhaul_sinr, backhaul_capacity : `dict[int, float]`
        Per active MAP
    sum_rate : `float`
        R(t)
    per_bs : `dict[int, float]`
        Rate subtotal of every BS
    """

    gamma: dict[tuple[int, int], float] = field(default_factory=dict)
    rate: dict[tuple[int, int], float] = field(default_factory=dict)
    access_sinr: dict[tuple[int, int], float] = field(default_factory=dict)
    access_capacity: dict[tuple[int, int], float] = field(default_factory=dict)
    backhaul_sinr: dict[int, float] = field(default_factory=dict)
    backhaul_capacity: dict[int, float] = field(default_factory=dict)
    sum_rate: float = 0.0
    per_bs: dict[int, float] = field(default_factory=dict)


def greedy_max_snr(
    snr: np.ndarray, bs_ids: list[int], beam_limits: dict[int, float], eligible: list[int] | np.ndarray
) -> AssociationState:
    """
    Greedy max-SNR association. UEs are served in descending order of their best SNR; each takes its highest SNR
    BS that still has a free beam (ties to the lowest BS id) and stays unassociated when every reachable BS is full.

    Parameters
    ----------
    snr : `np.ndarray`
        SNR of every BS (rows, in `bs_ids` order) to every UE (columns)
    bs_ids : `list[int]`
    beam_limits : `dict[int, float]`
        K_i per BS id
    eligible : `list[int] | np.ndarray`
        Column indices (UE ids) allowed to associate

    Returns
    -------
    `AssociationState`
    """

    assoc = AssociationState(beam_limits={bs: beam_limits[bs] for bs in bs_ids})
    eligible = [int(j) for j in eligible]
    if not eligible or len(bs_ids) == 0:
        return assoc

    ids = np.asarray(bs_ids)
    best = snr[:, eligible].max(axis=0)
    order = [eligible[k] for k in sorted(range(len(eligible)), key=lambda k: (-best[k], eligible[k]))]
    load = {bs: 0 for bs in bs_ids}
    for j in order:
        for r in np.lexsort((ids, -snr[:, j])):
            bs = int(ids[r])
            if snr[r, j] > 0 and load[bs] < beam_limits[bs]:
                assoc.serving[j] = bs
                load[bs] += 1
                break

    return assoc


def associate_max_snr(state: NetworkState, cfg: RadioConfig) -> AssociationState:
    """
    Associate every unblocked UE of the current slot with `greedy_max_snr` over the donor and the active MAPs.
    """

    bs_ids = state.bs_ids
    snr = snr_matrix(state, cfg)
    eligible = [u.id for u in state.ues if not u.blocked]
    return greedy_max_snr(snr, bs_ids, {bs: state.beam_limit(bs) for bs in bs_ids}, eligible)


def proportional_allocation(gamma: dict[int, float], capacity: float) -> dict[int, float]:
    """
    Backhaul fractions of one MAP. All demands fit: beta_j = Gamma_j / C. Otherwise the capacity is shared in
    proportion to the demands: beta_j = Gamma_j / sum(Gamma).

    Parameters
    ----------
    gamma : `dict[int, float]`
        Effective access demand per UE of the MAP
    capacity : `float`
        Backhaul capacity C^(b) of the MAP

    Returns
    -------
    `dict[int, float]`
        Empty when the MAP has no UE or no backhaul capacity
    """

    if capacity <= 0 or not gamma:
        return {}

    total = sum(gamma.values())
    if total <= capacity:
        return {j: g / capacity for j, g in gamma.items()}

    return {j: g / total for j, g in gamma.items()}


def allocate_backhaul(
    assoc: AssociationState, gamma: dict[tuple[int, int], float], capacities: dict[int, float]
) -> BackhaulAllocation:
    """
    Split the backhaul capacity of every active MAP between the UEs it serves.

    Parameters
    ----------
    assoc : `AssociationState`
    gamma : `dict[tuple[int, int], float]`
        Effective access demand of every associated pair
    capacities : `dict[int, float]`
        C^(b) of every active MAP

    Returns
    -------
    `BackhaulAllocation`
    """

    allocation = BackhaulAllocation()
    for map_id, capacity in sorted(capacities.items()):
        demands = {j: gamma[(map_id, j)] for j in assoc.served(map_id)}
        for j, b in proportional_allocation(demands, capacity).items():
            allocation.beta[(map_id, j)] = b

    return allocation


def effective_rate(gamma: float, beta: float, z: int, c_backhaul: float, is_donor: bool) -> float:
    """Donor links deliver Gamma; MAP links min(Gamma, beta z C^(b))"""

    if is_donor:
        return gamma
    return min(gamma, beta * z * c_backhaul)


def sum_rate(state: NetworkState) -> float:
    """R(t): sum of every effective rate of the current slot"""

    if state.report is None:
        return 0.0
    return float(sum(state.report.rate.values()))


def configure_slot(state: NetworkState, channel: ChannelModel, cfg: RadioConfig) -> RateReport:
    """
    Configure the network for the current slot: draw the channel, associate, compute access and backhaul capacities,
    allocate the backhaul and derive every effective rate. Results are stored on `state`.

    Parameters
    ----------
    state : `NetworkState`
    channel : `ChannelModel`
    cfg : `RadioConfig`

    Returns
    -------
    `RateReport`
    """

    state.links = channel.draw(state)
    state.association = associate_max_snr(state, cfg)
    assoc = state.association
    beams = access_beams(state)

    report = RateReport()
    for j, i in sorted(assoc.serving.items()):
        sinr = access_budget(state, i, j, cfg, beams=beams).sinr
        capacity = float(access_capacity(sinr, 1, cfg))
        report.access_sinr[(i, j)] = sinr
        report.access_capacity[(i, j)] = capacity
        report.gamma[(i, j)] = min(state.ues[j].demand_bps, capacity)

    for node in state.active_maps:
        sinr = backhaul_sinr(state, node.id, cfg)
        report.backhaul_sinr[node.id] = sinr
        report.backhaul_capacity[node.id] = float(backhaul_capacity(sinr, 1, cfg))

    state.allocation = allocate_backhaul(assoc, report.gamma, report.backhaul_capacity)
    for (i, j), gamma in sorted(report.gamma.items()):
        is_donor = i == DONOR_ID
        rate = effective_rate(
            gamma=gamma,
            beta=state.allocation.of(i, j),
            z=1,
            c_backhaul=0.0 if is_donor else report.backhaul_capacity[i],
            is_donor=is_donor,
        )
        report.rate[(i, j)] = rate
        report.per_bs[i] = report.per_bs.get(i, 0.0) + rate

    report.sum_rate = float(sum(report.rate.values()))
    state.report = report
    return report


@dataclass
class ConstraintReport:
    """
    Offending indices per constraint C1..C8; an empty list means the constraint holds.
    """

    violations: dict[str, list] = field(default_factory=lambda: {f"C{k}": [] for k in range(1, 9)})

    @property
    def ok(self) -> bool:
        return all(len(v) == 0 for v in self.violations.values())

    def failed(self) -> list[str]:
        return [name for name, v in self.violations.items() if v]

    def __str__(self) -> str:
        if self.ok:
            return "C1-C8 satisfied"
        return ", ".join(f"{name} violated by {self.violations[name]}" for name in self.failed())


def check_constraints(state: NetworkState) -> ConstraintReport:
    """
    Check the slot against C1..C8 of the network management problem.

    Returns
    -------
    `ConstraintReport`
    """

    report = ConstraintReport()
    v = report.violations
    active = set(state.active_ids)
    assoc = state.association or AssociationState()

    for node in state.maps:
        if node.active not in (True, False):
            v["C1"].append(node.id)

    for j, bs in sorted(assoc.serving.items()):
        if bs not in (DONOR_ID, *active):
            v["C3"].append(j)
        elif state.ues[j].blocked:
            v["C3"].append(j)

    for bs, count in sorted(assoc.served_count.items()):
        limit = state.beam_limit(bs) if bs in (DONOR_ID, *active) else 0
        if count > limit:
            v["C2"].append(bs)

    if state.deployed > state.config.max_maps:
        v["C4"].append(state.deployed)

    allocation = state.allocation
    if allocation is not None:
        totals: dict[int, float] = {}
        for (i, j), b in sorted(allocation.beta.items()):
            if not 0.0 - _TOL <= b <= 1.0 + _TOL:
                v["C5"].append((i, j))
            totals[i] = totals.get(i, 0.0) + b
        for i, total in sorted(totals.items()):
            if total > 1.0 + _TOL or i not in active:
                v["C6"].append(i)

    for node in state.active_maps:
        if not state.region.contains(node.loc):
            v["C7"].append(node.id)
        previous = state.previous_locations.get(node.id)
        if previous is not None and np.linalg.norm(node.loc - previous) > state.config.max_step_m + _TOL:
            v["C8"].append(node.id)

    return report


def assert_constraints(state: NetworkState) -> ConstraintReport:
    """Raise `ConstraintViolationError` unless the slot satisfies C1..C8"""

    report = check_constraints(state)
    if not report.ok:
        raise ConstraintViolationError(f"slot {state.t}: {report}")
    return report
