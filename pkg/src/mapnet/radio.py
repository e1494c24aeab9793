"""radio"""

from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING
import math

import numpy as np

from mapnet.config import RadioConfig
from mapnet.errors import ChannelError, InactiveMapError
from mapnet.geometry import elevation_deg

if TYPE_CHECKING:
    from mapnet.scenario import NetworkState


SPEED_OF_LIGHT = 299_792_458.0
DONOR_ID = 0


class LinkClass(str, Enum):
    DONOR_GROUND = "donor_ground"
    MAP_AIR_TO_GROUND = "map_air_to_ground"
    DONOR_TO_MAP = "donor_to_map"


def db_to_linear(db: float) -> float:
    return 10 ** (db / 10.0)


def dbm_to_w(dbm: float) -> float:
    return 10 ** ((dbm - 30.0) / 10.0)


def los_probability(elevation: float | np.ndarray, a: float = 9.61, b: float = 0.16) -> float | np.ndarray:
    """
    Elevation angle sigmoid of the air-to-ground line of sight probability.

    Parameters
    ----------
    elevation : `float | np.ndarray`
        Elevation angle in degrees
    a, b : `float`
        Environment constants, dense urban by default
    """

    return 1.0 / (1.0 + a * np.exp(-b * (np.asarray(elevation) - a)))


def free_space_loss_db(fc_hz: float) -> float:
    """Free space loss at the 1 m reference distance"""

    return 20.0 * math.log10(4.0 * math.pi * fc_hz / SPEED_OF_LIGHT)


def carrier(link_class: LinkClass, cfg: RadioConfig) -> float:
    return cfg.map_fc_hz if link_class is LinkClass.MAP_AIR_TO_GROUND else cfg.donor_fc_hz


def shadowing_std_db(link_class: LinkClass, cfg: RadioConfig) -> float:
    if not cfg.shadowing:
        return 0.0
    variance = cfg.shadowing_var_map_db if link_class is LinkClass.MAP_AIR_TO_GROUND else cfg.shadowing_var_donor_db
    return math.sqrt(variance)


def exponent(link_class: LinkClass, los: bool | np.ndarray, cfg: RadioConfig) -> np.ndarray:
    """Path loss exponent; ground links have a single exponent, air links depend on the LoS state"""

    if link_class is LinkClass.DONOR_GROUND:
        return np.full(np.shape(los), cfg.ground_exponent)
    return np.where(los, cfg.los_exponent, cfg.nlos_exponent)


def path_loss_db(
    distance_m: float | np.ndarray, link_class: LinkClass, los: bool | np.ndarray, cfg: RadioConfig
) -> float | np.ndarray:
    """
    Log-distance path loss PL0(fc) + 10 n log10(d / 1 m), distances clamped to the 1 m reference.
    """

    d = np.maximum(np.asarray(distance_m, dtype=float), 1.0)
    loss = free_space_loss_db(carrier(link_class, cfg)) + 10.0 * exponent(link_class, los, cfg) * np.log10(d)
    return float(loss) if np.ndim(loss) == 0 else loss


def fading_power(rng: np.random.Generator, cfg: RadioConfig, size: int | None = None) -> float | np.ndarray:
    """Nakagami-m power fading: Gamma(m, 1/m), unit mean"""

    if not cfg.fading:
        return 1.0 if size is None else np.ones(size)
    return rng.gamma(cfg.nakagami_m, 1.0 / cfg.nakagami_m, size=size)


def path_gain(
    tx: np.ndarray,
    rx: np.ndarray,
    link_class: LinkClass,
    rng: np.random.Generator,
    cfg: RadioConfig,
    los: bool | None = None,
) -> float:
    """
    Channel gain G^H times small scale fading of a single link, with fresh LoS, shadowing and fading draws.

    Parameters
    ----------
    tx, rx : `np.ndarray`
        3D locations
    link_class : `LinkClass`
    rng : `np.random.Generator`
    cfg : `RadioConfig`
    los : `bool | None`
        Force the LoS state, `None` samples it from the elevation sigmoid

    Returns
    -------
    `float`
        Linear gain
    """

    d = float(np.linalg.norm(np.asarray(tx, dtype=float) - np.asarray(rx, dtype=float)))
    if d <= 0:
        raise ChannelError("transmitter and receiver are coincident")

    if los is None:
        if link_class is LinkClass.DONOR_GROUND:
            los = False
        else:
            los = bool(rng.random() < los_probability(elevation_deg(tx, rx), cfg.los_a, cfg.los_b))

    std = shadowing_std_db(link_class, cfg)
    shadow = rng.normal(0.0, std) if std > 0 else 0.0
    large_scale = 10 ** (-(path_loss_db(d, link_class, los, cfg) + shadow) / 10.0)
    return float(large_scale * fading_power(rng, cfg))


def access_capacity(sinr: float | np.ndarray, x: int | np.ndarray, cfg: RadioConfig) -> float | np.ndarray:
    """(1 - mu) B log2(1 + x SINR)"""

    return (1.0 - cfg.mu) * cfg.bandwidth_hz * np.log2(1.0 + np.asarray(x) * np.asarray(sinr))


def backhaul_capacity(sinr: float | np.ndarray, z: int | np.ndarray, cfg: RadioConfig) -> float | np.ndarray:
    """mu B log2(1 + z SINR)"""

    return cfg.mu * cfg.bandwidth_hz * np.log2(1.0 + np.asarray(z) * np.asarray(sinr))


@dataclass
class LinkBudget:
    """
    Terms of one SINR computation, all linear.

    Attributes
    ----------
    tx_power : `float`
        P^Tx in W
    tx_gain, rx_gain : `float`
        G^Tx, G^Rx
    channel_gain : `float`
        G^H (path loss and shadowing)
    fading : `float`
        zeta
    interference_w : `float`
    noise_w : `float`
    """

    tx_power: float
    tx_gain: float
    rx_gain: float
    channel_gain: float
    fading: float
    interference_w: float
    noise_w: float

    @property
    def desired_w(self) -> float:
        return self.fading * self.tx_power * self.tx_gain * self.channel_gain * self.rx_gain

    @property
    def sinr(self) -> float:
        return self.desired_w / (self.interference_w + self.noise_w)


@dataclass
class _LargeScale:
    tx_anchor: np.ndarray
    rx_anchor: np.ndarray
    los: np.ndarray
    shadow_db: np.ndarray


@dataclass
class LinkTable:
    """
    Channel realisation of one slot.

    Attributes
    ----------
    bs_ids : `list[int]`
        Row order of `channel_gain` and `fading`: donor then active MAPs
    channel_gain : `np.ndarray`
        G^H of every BS to every UE, shape (n_bs, K)
    fading : `np.ndarray`
        zeta of every BS to every UE
    backhaul_channel_gain, backhaul_fading : `dict[int, float]`
        Donor to MAP terms per active MAP
    """

    bs_ids: list[int]
    channel_gain: np.ndarray
    fading: np.ndarray
    backhaul_channel_gain: dict[int, float] = field(default_factory=dict)
    backhaul_fading: dict[int, float] = field(default_factory=dict)

    def row(self, bs_id: int) -> int:
        return self.bs_ids.index(bs_id)

    def gain(self, bs_id: int, ue: int) -> float:
        """G^H zeta of one access link"""

        r = self.row(bs_id)
        return float(self.channel_gain[r, ue] * self.fading[r, ue])


class ChannelModel:
    """
    Draws the per-slot channel of a scenario. LoS state and shadowing of a link are kept until one of its ends moved
    more than the decorrelation distance since they were drawn; fading is redrawn every slot.
    """

    cfg: RadioConfig
    _access: dict[int, _LargeScale]
    _backhaul: dict[int, _LargeScale]

    def __init__(self, cfg: RadioConfig) -> None:
        self.cfg = cfg
        self._access = {}
        self._backhaul = {}

    def _large_scale(
        self,
        cache: dict[int, _LargeScale],
        key: int,
        tx: np.ndarray,
        rx: np.ndarray,
        link_class: LinkClass,
        rng: np.random.Generator,
    ) -> _LargeScale:
        n = rx.shape[0]
        entry = cache.get(key)
        if entry is None or entry.rx_anchor.shape[0] != n:
            redraw = np.ones(n, dtype=bool)
            entry = _LargeScale(tx_anchor=tx.copy(), rx_anchor=rx.copy(), los=np.zeros(n, bool), shadow_db=np.zeros(n))
        elif np.linalg.norm(tx - entry.tx_anchor) > self.cfg.decorrelation_distance_m:
            redraw = np.ones(n, dtype=bool)
            entry.tx_anchor = tx.copy()
        else:
            redraw = np.linalg.norm(rx - entry.rx_anchor, axis=1) > self.cfg.decorrelation_distance_m

        count = int(redraw.sum())
        if count > 0:
            if link_class is LinkClass.DONOR_GROUND:
                entry.los[redraw] = False
            else:
                elevations = np.array([elevation_deg(tx, r) for r in rx[redraw]])
                p_los = los_probability(elevations, self.cfg.los_a, self.cfg.los_b)
                entry.los[redraw] = rng.random(count) < p_los
            std = shadowing_std_db(link_class, self.cfg)
            entry.shadow_db[redraw] = rng.normal(0.0, std, size=count) if std > 0 else 0.0
            entry.rx_anchor[redraw] = rx[redraw]

        cache[key] = entry
        return entry

    def _gains(self, entry: _LargeScale, tx: np.ndarray, rx: np.ndarray, link_class: LinkClass) -> np.ndarray:
        distances = np.linalg.norm(rx - tx, axis=1)
        if np.any(distances <= 0):
            raise ChannelError("transmitter and receiver are coincident")
        loss = path_loss_db(distances, link_class, entry.los, self.cfg)
        return 10 ** (-(np.asarray(loss) + entry.shadow_db) / 10.0)

    def draw(self, state: NetworkState) -> LinkTable:
        """
        Realise the channel of the current slot for every BS to UE link and every donor to MAP link.
        """

        rng = state.streams.channel
        bs_ids = state.bs_ids
        ue_locations = np.column_stack([state.ue_locations(), np.zeros(len(state.ues))])
        channel_gain = np.zeros((len(bs_ids), len(state.ues)))
        for r, bs_id in enumerate(bs_ids):
            link_class = LinkClass.DONOR_GROUND if bs_id == DONOR_ID else LinkClass.MAP_AIR_TO_GROUND
            tx = state.bs_location(bs_id)
            entry = self._large_scale(self._access, bs_id, tx, ue_locations, link_class, rng)
            channel_gain[r] = self._gains(entry, tx, ue_locations, link_class)

        fading = np.asarray(fading_power(rng, self.cfg, size=channel_gain.size)).reshape(channel_gain.shape)

        backhaul_gain: dict[int, float] = {}
        backhaul_fading: dict[int, float] = {}
        for node in state.active_maps:
            rx = node.loc.reshape(1, 3)
            entry = self._large_scale(self._backhaul, node.id, state.donor.loc, rx, LinkClass.DONOR_TO_MAP, rng)
            backhaul_gain[node.id] = float(self._gains(entry, state.donor.loc, rx, LinkClass.DONOR_TO_MAP)[0])
            backhaul_fading[node.id] = float(fading_power(rng, self.cfg))

        return LinkTable(
            bs_ids=bs_ids,
            channel_gain=channel_gain,
            fading=fading,
            backhaul_channel_gain=backhaul_gain,
            backhaul_fading=backhaul_fading,
        )


@dataclass
class AntennaPattern:
    """Two-lobe pattern: main lobe inside a beam cone, side lobe elsewhere"""

    tx_power: float
    mainlobe: float
    sidelobe: float
    beam_width_deg: float

    def beam_count_towards(self, direction: np.ndarray, beams: list[np.ndarray]) -> int:
        """Number of `beams` whose cone contains `direction`"""

        if not beams:
            return 0
        unit = direction / np.linalg.norm(direction)
        stacked = np.array(beams)
        cosines = stacked @ unit / np.linalg.norm(stacked, axis=1)
        return int(np.sum(cosines >= math.cos(math.radians(self.beam_width_deg / 2.0)) - 1e-12))

    def leakage(self, direction: np.ndarray, beams: list[np.ndarray]) -> float:
        """Power radiated towards `direction` by every beam of a node (W, gains applied)"""

        main = self.beam_count_towards(direction, beams)
        return self.tx_power * (main * self.mainlobe + (len(beams) - main) * self.sidelobe)


def pattern(bs_id: int, cfg: RadioConfig, beam_limit: float, n_beams: int) -> AntennaPattern:
    """
    Antenna pattern of a BS. A MAP splits its aperture over its K_i beams; the donor (unbounded beams) over the
    beams it currently forms in the band.
    """

    if bs_id == DONOR_ID:
        width = cfg.donor_aperture_deg / max(n_beams, 1)
        return AntennaPattern(
            tx_power=dbm_to_w(cfg.donor_tx_power_dbm),
            mainlobe=db_to_linear(cfg.donor_gain_dbi),
            sidelobe=db_to_linear(cfg.donor_sidelobe_dbi),
            beam_width_deg=width,
        )

    width = cfg.map_aperture_deg / beam_limit
    return AntennaPattern(
        tx_power=dbm_to_w(cfg.map_tx_power_dbm),
        mainlobe=db_to_linear(cfg.map_mainlobe_dbi),
        sidelobe=db_to_linear(cfg.map_sidelobe_dbi),
        beam_width_deg=width,
    )


def access_beams(state: NetworkState) -> dict[int, list[np.ndarray]]:
    """Beam direction vectors of every BS, one per served UE, in ascending UE id"""

    beams: dict[int, list[np.ndarray]] = {bs_id: [] for bs_id in state.bs_ids}
    if state.association is None:
        return beams

    for ue in state.ues:
        bs_id = state.association.serving_bs(ue.id)
        if bs_id is not None and bs_id in beams:
            beams[bs_id].append(ue.loc3d - state.bs_location(bs_id))
    return beams


def snr_matrix(state: NetworkState, cfg: RadioConfig) -> np.ndarray:
    """
    Interference free access SNR of every BS to every UE with the main lobe aimed at the UE, shape (n_bs, K).
    """

    if state.links is None:
        raise ChannelError("the slot channel has not been drawn")

    links = state.links
    ue_gain = db_to_linear(cfg.ue_gain_dbi)
    snr = np.zeros_like(links.channel_gain)
    for r, bs_id in enumerate(links.bs_ids):
        p = pattern(bs_id, cfg, state.beam_limit(bs_id), 1)
        snr[r] = p.tx_power * p.mainlobe * links.channel_gain[r] * links.fading[r] * ue_gain / cfg.access_noise_w
    return snr


def access_budget(
    state: NetworkState, i: int, j: int, cfg: RadioConfig, beams: dict[int, list[np.ndarray]] | None = None
) -> LinkBudget:
    """
    Terms of the access SINR of UE `j` served by BS `i`: interference from every beam of every other BS through
    its pattern, plus side lobe coupling from the other beams of `i`. `beams` may carry a precomputed
    `access_beams` of the slot.
    """

    if state.links is None:
        raise ChannelError("the slot channel has not been drawn")

    links = state.links
    beams = access_beams(state) if beams is None else beams
    ue = state.ues[j]
    ue_gain = db_to_linear(cfg.ue_gain_dbi)

    own = pattern(i, cfg, state.beam_limit(i), len(beams.get(i, [])))
    serving_row = links.row(i)
    own_beams = len(beams.get(i, []))
    if state.association is None or state.association.serving_bs(j) != i:
        own_beams += 1

    interference = (own_beams - 1) * own.tx_power * own.sidelobe * links.gain(i, j) * ue_gain
    for bs_id, bs_beams in beams.items():
        if bs_id == i or not bs_beams:
            continue
        other = pattern(bs_id, cfg, state.beam_limit(bs_id), len(bs_beams))
        direction = ue.loc3d - state.bs_location(bs_id)
        interference += other.leakage(direction, bs_beams) * links.gain(bs_id, j) * ue_gain

    return LinkBudget(
        tx_power=own.tx_power,
        tx_gain=own.mainlobe,
        rx_gain=ue_gain,
        channel_gain=float(links.channel_gain[serving_row, j]),
        fading=float(links.fading[serving_row, j]),
        interference_w=float(interference),
        noise_w=cfg.access_noise_w,
    )


def access_sinr(state: NetworkState, i: int, j: int, cfg: RadioConfig) -> float:
    """Access SINR of UE `j` served (or candidate) by BS `i`"""

    return access_budget(state, i, j, cfg).sinr


def backhaul_budget(state: NetworkState, i: int, cfg: RadioConfig) -> LinkBudget:
    """
    Terms of the backhaul SINR of MAP `i`: the donor beams towards the other active MAPs leak into MAP `i` through
    the donor pattern over the same donor to MAP `i` channel.
    """

    if state.links is None:
        raise ChannelError("the slot channel has not been drawn")

    node = state.map_by_id(i)
    if not node.active:
        raise InactiveMapError(f"MAP {i} is not deployed")

    links = state.links
    others = [m for m in state.active_maps if m.id != i]
    donor = pattern(DONOR_ID, cfg, state.donor.beam_limit, len(others) + 1)
    rx_gain = db_to_linear(cfg.map_mainlobe_dbi)
    channel = links.backhaul_channel_gain[i] * links.backhaul_fading[i]

    direction = node.loc - state.donor.loc
    other_beams = [m.loc - state.donor.loc for m in others]
    interference = donor.leakage(direction, other_beams) * channel * rx_gain

    return LinkBudget(
        tx_power=donor.tx_power,
        tx_gain=donor.mainlobe,
        rx_gain=rx_gain,
        channel_gain=links.backhaul_channel_gain[i],
        fading=links.backhaul_fading[i],
        interference_w=float(interference),
        noise_w=cfg.backhaul_noise_w,
    )


def backhaul_sinr(state: NetworkState, i: int, cfg: RadioConfig) -> float:
    """Backhaul SINR of active MAP `i`"""

    return backhaul_budget(state, i, cfg).sinr
