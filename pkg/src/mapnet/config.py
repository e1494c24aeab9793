from __future__ import annotations
from dataclasses import dataclass, field, fields, is_dataclass, asdict, replace
from typing import Any, get_type_hints
import hashlib
import json
import os
import types

import tomli

from mapnet.errors import ConfigError
from mapnet.geometry import Region


@dataclass
class ScenarioConfig:
    """
    Configuration of the simulated world: geometry, node populations, UE mobility, traffic and blockage.

    Attributes
    ----------
    region : `Region`
        MAP flight box; UEs live on its footprint
    n_ue : `int = 25`
        Number of UEs K(t) at t = 0 (constant within an episode)
    max_maps : `int = 8`
        Number of MAPs M that may ever be active (C4)
    map_beam_limit : `int = 10`
        Beams K_i of every MAP
    ue_speed : `float = 0.8`
        UE speed in m/s
    blockage_prob : `float = 0.5`
        Probability of a UE being blocked in each blockage epoch
    blockage_epoch : `int = 10`
        Slots between blockage resampling
    demand_mean_gbps : `float = 1.0`
        Mean k of the Poisson traffic demand in Gbps
    mobility_groups : `int = 5`
        Number of UE groups sharing a waypoint
    mobility_jitter_m : `float = 2.0`
        Standard deviation of each UE's offset around its group waypoint
    donor_location : `tuple[float, float, float] = (100, 100, 10)`
        Fixed location of the IAB donor
    max_step_m : `float = 5.0`
        Largest MAP displacement per slot (C8)
    slot_duration_s : `float = 1.0`
        Slot length; speeds convert to meters per slot through it
    slot_count : `int = 100`
        Episode length T_l
    seed : `int = 0`
        Seed of every random stream of the scenario

    Methods
    -------
    validate() -> None | list[ValueError]
        Validate the configuration settings.
    """

    region: Region = field(default_factory=Region)
    n_ue: int = 25
    max_maps: int = 8
    map_beam_limit: int = 10
    ue_speed: float = 0.8
    blockage_prob: float = 0.5
    blockage_epoch: int = 10
    demand_mean_gbps: float = 1.0
    mobility_groups: int = 5
    mobility_jitter_m: float = 2.0
    donor_location: tuple[float, float, float] = (100.0, 100.0, 10.0)
    max_step_m: float = 5.0
    slot_duration_s: float = 1.0
    slot_count: int = 100
    seed: int = 0

    def validate(self) -> None | list[ValueError]:
        """
        Validate the configuration settings. Valid configurations return `None`. A list of `ValueError`'s will be
        returned if invalid settings are present

        Returns
        -------
        `None | list[ValueError]`
        """

        errors: list[ValueError] = []
        region_errors = self.region.validate()
        if region_errors is not None:
            errors.extend(region_errors)

        if self.n_ue < 1:
            errors.append(ValueError("n_ue should be at least 1"))

        if self.max_maps < 1:
            errors.append(ValueError("max_maps should be at least 1"))

        if self.map_beam_limit < 1:
            errors.append(ValueError("map_beam_limit should be at least 1"))

        if self.ue_speed < 0:
            errors.append(ValueError("ue_speed should be positive"))

        if self.blockage_prob < 0 or self.blockage_prob > 1:
            errors.append(ValueError("blockage_prob should be between 0 and 1"))

        if self.blockage_epoch < 1:
            errors.append(ValueError("blockage_epoch should be at least 1"))

        if self.demand_mean_gbps <= 0:
            errors.append(ValueError("demand_mean_gbps should be positive"))

        if self.mobility_groups < 1:
            errors.append(ValueError("mobility_groups should be at least 1"))

        if self.mobility_jitter_m < 0:
            errors.append(ValueError("mobility_jitter_m should be positive"))

        if len(self.donor_location) != 3:
            errors.append(ValueError("donor_location should have 3 coordinates"))

        if self.max_step_m <= 0:
            errors.append(ValueError("max_step_m should be positive"))

        if self.slot_duration_s <= 0:
            errors.append(ValueError("slot_duration_s should be positive"))

        if self.slot_count < 1:
            errors.append(ValueError("slot_count should be at least 1"))

        if len(errors) > 0:
            return errors

        return None


@dataclass
class RadioConfig:
    """
    Physical layer constants. Defaults are the channel parameters of the simulated 5G deployment.

    Attributes
    ----------
    bandwidth_hz : `float = 500e6`
        System bandwidth B
    mu : `float = 0.75`
        Fraction of B dedicated to backhaul
    noise_psd_dbm_hz : `float = -174`
        Thermal noise N0
    donor_fc_hz, map_fc_hz : `float = 2e9, 28e9`
        Carrier frequencies of the donor and of the MAPs
    donor_aperture_deg, map_aperture_deg : `float = 180, 90`
        Antenna aperture; split evenly between the beams of a node
    donor_gain_dbi, donor_sidelobe_dbi : `float = 17, -3`
        Donor main lobe and leakage gains
    map_mainlobe_dbi, map_sidelobe_dbi : `float = 20, -10`
        MAP two-lobe pattern
    ue_gain_dbi : `float = 0`
        Isotropic UE antenna
    donor_tx_power_dbm, map_tx_power_dbm : `float = 20, 30`
        Transmit power per beam
    shadowing_var_donor_db, shadowing_var_map_db : `float = 3, 12`
        Log-normal shadowing variance (dB^2) of donor and MAP links
    nakagami_m : `float = 3`
        Nakagami-m shape of small scale fading
    los_a, los_b : `float = 9.61, 0.16`
        Elevation sigmoid of the LoS probability
    los_exponent, nlos_exponent, ground_exponent : `float = 2.0, 3.5, 3.0`
        Log-distance path loss exponents
    decorrelation_distance_m : `float = 10`
        Movement after which LoS state and shadowing are redrawn
    shadowing, fading : `bool = True`
        Switches for the random channel components
    """

    bandwidth_hz: float = 500e6
    mu: float = 0.75
    noise_psd_dbm_hz: float = -174.0
    donor_fc_hz: float = 2e9
    map_fc_hz: float = 28e9
    donor_aperture_deg: float = 180.0
    map_aperture_deg: float = 90.0
    donor_gain_dbi: float = 17.0
    donor_sidelobe_dbi: float = -3.0
    map_mainlobe_dbi: float = 20.0
    map_sidelobe_dbi: float = -10.0
    ue_gain_dbi: float = 0.0
    donor_tx_power_dbm: float = 20.0
    map_tx_power_dbm: float = 30.0
    shadowing_var_donor_db: float = 3.0
    shadowing_var_map_db: float = 12.0
    nakagami_m: float = 3.0
    los_a: float = 9.61
    los_b: float = 0.16
    los_exponent: float = 2.0
    nlos_exponent: float = 3.5
    ground_exponent: float = 3.0
    decorrelation_distance_m: float = 10.0
    shadowing: bool = True
    fading: bool = True

    @property
    def noise_psd_w_hz(self) -> float:
        return 10 ** ((self.noise_psd_dbm_hz - 30.0) / 10.0)

    @property
    def access_noise_w(self) -> float:
        """(1 - mu) N0 B"""

        return (1.0 - self.mu) * self.noise_psd_w_hz * self.bandwidth_hz

    @property
    def backhaul_noise_w(self) -> float:
        """mu N0 B"""

        return self.mu * self.noise_psd_w_hz * self.bandwidth_hz

    def validate(self) -> None | list[ValueError]:
        """
        Validate the configuration settings. Valid configurations return `None`. A list of `ValueError`'s will be
        returned if invalid settings are present

        Returns
        -------
        `None | list[ValueError]`
        """

        errors: list[ValueError] = []
        if self.bandwidth_hz <= 0:
            errors.append(ValueError("bandwidth_hz should be positive"))

        if self.mu < 0 or self.mu > 1:
            errors.append(ValueError("mu should be between 0 and 1"))

        for name in ("donor_aperture_deg", "map_aperture_deg"):
            aperture = getattr(self, name)
            if aperture <= 0 or aperture > 360:
                errors.append(ValueError(f"{name} should be in (0, 360]"))

        for name in ("donor_fc_hz", "map_fc_hz"):
            if getattr(self, name) <= 0:
                errors.append(ValueError(f"{name} should be positive"))

        for name in ("shadowing_var_donor_db", "shadowing_var_map_db", "decorrelation_distance_m"):
            if getattr(self, name) < 0:
                errors.append(ValueError(f"{name} should be positive"))

        if self.nakagami_m < 0.5:
            errors.append(ValueError("nakagami_m should be at least 0.5"))

        for name in ("los_exponent", "nlos_exponent", "ground_exponent"):
            if getattr(self, name) <= 0:
                errors.append(ValueError(f"{name} should be positive"))

        if len(errors) > 0:
            return errors

        return None


@dataclass
class TradeoffConfig:
    """
    Thresholds and clocks of the decentralized trade-off controller.

    Attributes
    ----------
    phi_max : `float = 6e3`
        Inertia (m^2) above which a MAP asks for support
    phi_min : `float = 0`
        Inertia below which a MAP counts towards repatriation
    k_min : `int = 2`
        Served UEs below which a MAP counts towards repatriation
    decision_period : `int = 10`
        Slots t_n between decision rounds
    reset_period : `int = 10`
        Slots tau_n between trade-off resets
    spawn_offset_m : `float = 20`
        Half width of the horizontal spawn box around the requesting MAP
    keep_one_map : `bool = True`
        Refuse to repatriate the last active MAP
    """

    phi_max: float = 6e3
    phi_min: float = 0.0
    k_min: int = 2
    decision_period: int = 10
    reset_period: int = 10
    spawn_offset_m: float = 20.0
    keep_one_map: bool = True

    def validate(self) -> None | list[ValueError]:
        """
        Validate the configuration settings. Valid configurations return `None`. A list of `ValueError`'s will be
        returned if invalid settings are present

        Returns
        -------
        `None | list[ValueError]`
        """

        errors: list[ValueError] = []
        if self.phi_min < 0:
            errors.append(ValueError("phi_min should be positive"))

        if self.phi_max < self.phi_min:
            errors.append(ValueError("phi_max should not be lower than phi_min"))

        if self.k_min < 0:
            errors.append(ValueError("k_min should be positive"))

        if self.decision_period < 1:
            errors.append(ValueError("decision_period should be at least 1"))

        if self.reset_period < 1:
            errors.append(ValueError("reset_period should be at least 1"))

        if self.spawn_offset_m < 0:
            errors.append(ValueError("spawn_offset_m should be positive"))

        if len(errors) > 0:
            return errors

        return None


@dataclass
class PlacementConfig:
    """
    Low level placement MDP: observation sizes, reward parameters, encoder sizes and PPO hyper-parameters.

    Attributes
    ----------
    n_ue_obs, n_map_obs : `int = 15, 5`
        UE and neighbour MAP slots of an observation
    demand_norm_gbps : `float = 10`
        Demand scale of the UE observation feature
    d0 : `float = 10`
        Reference distance of the reward
    cap_scale : `float = 1e-9`
        Converts backhaul capacity from bps to reward units
    gamma : `float = 0.6`
        Discount factor
    horizon : `int = 100`
        Training episode length T_l
    training_altitude_m : `float = 60`
        Altitude of the centroid targets
    kmeans_max_iter : `int = 50`
        Iterations of the centroid clustering
    embedding_dim : `int = 32`
        Per entity embedding width
    trunk : `tuple[int, ...] = (64, 64)`
        Feed forward trunk widths
    attention_heads : `int = 1`
        Learned queries per attention pooling block
    learning_rate : `float = 1e-4`
    clip_ratio : `float = 0.2`
    epochs : `int = 4`
        Optimisation passes per batch
    batch_episodes : `int = 10`
        Episodes per batch
    entropy_coef : `float = 0.01`
    value_coef : `float = 0.5`
    max_grad_norm : `float = 0.5`
        Gradient clipping, 0 disables
    total_steps : `int = 50000`
        Training budget in agent steps
    train_ue_speed : `float = 0.0`
        UE speed of training scenarios
    train_blockage_prob : `float = 0.0`
        Blockage probability of training scenarios
    curve_window : `int = 500`
        Rolling window of the reward curve
    """

    n_ue_obs: int = 15
    n_map_obs: int = 5
    demand_norm_gbps: float = 10.0
    d0: float = 10.0
    cap_scale: float = 1e-9
    gamma: float = 0.6
    horizon: int = 100
    training_altitude_m: float = 60.0
    kmeans_max_iter: int = 50
    embedding_dim: int = 32
    trunk: tuple[int, ...] = (64, 64)
    attention_heads: int = 1
    learning_rate: float = 1e-4
    clip_ratio: float = 0.2
    epochs: int = 4
    batch_episodes: int = 10
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    total_steps: int = 50_000
    train_ue_speed: float = 0.0
    train_blockage_prob: float = 0.0
    curve_window: int = 500

    def validate(self) -> None | list[ValueError]:
        """
        Validate the configuration settings. Valid configurations return `None`. A list of `ValueError`'s will be
        returned if invalid settings are present

        Returns
        -------
        `None | list[ValueError]`
        """

        errors: list[ValueError] = []
        if self.n_ue_obs < 1 or self.n_map_obs < 1:
            errors.append(ValueError("n_ue_obs and n_map_obs should be at least 1"))

        if self.demand_norm_gbps <= 0:
            errors.append(ValueError("demand_norm_gbps should be positive"))

        if self.d0 <= 0:
            errors.append(ValueError("d0 should be positive"))

        if self.cap_scale < 0:
            errors.append(ValueError("cap_scale should be positive"))

        if self.gamma < 0 or self.gamma >= 1:
            errors.append(ValueError("gamma should be in [0, 1)"))

        if self.horizon < 1:
            errors.append(ValueError("horizon should be at least 1"))

        if self.kmeans_max_iter < 1:
            errors.append(ValueError("kmeans_max_iter should be at least 1"))

        if self.embedding_dim < 1 or self.attention_heads < 1 or any(w < 1 for w in self.trunk) or not self.trunk:
            errors.append(ValueError("encoder sizes should be at least 1"))

        if self.learning_rate < 0:
            errors.append(ValueError("learning_rate should be positive"))

        if self.clip_ratio <= 0:
            errors.append(ValueError("clip_ratio should be positive"))

        if self.epochs < 1 or self.batch_episodes < 1:
            errors.append(ValueError("epochs and batch_episodes should be at least 1"))

        if self.total_steps < 0:
            errors.append(ValueError("total_steps should be positive"))

        if self.train_blockage_prob < 0 or self.train_blockage_prob > 1:
            errors.append(ValueError("train_blockage_prob should be between 0 and 1"))

        if self.curve_window < 1:
            errors.append(ValueError("curve_window should be at least 1"))

        if len(errors) > 0:
            return errors

        return None


@dataclass
class FederationConfig:
    """
    Training regimes and the federation schedule.

    Attributes
    ----------
    tau_f : `int = 5000`
        Agent steps between aggregations
    alpha_f : `float = 0.5`
        Retention rate of the global weights
    codebook_sizes : `tuple[int, ...] = (2, 3, 4)`
        Team sizes with a codebook entry
    train_map_range : `tuple[int, int] = (2, 5)`
        Inclusive range of MAPs deployed in curriculum and federated training scenarios
    train_n_ue : `int = 25`
        UEs of training scenarios
    max_agents : `int = 6`
        MAP slots with a curriculum policy
    """

    tau_f: int = 5000
    alpha_f: float = 0.5
    codebook_sizes: tuple[int, ...] = (2, 3, 4)
    train_map_range: tuple[int, int] = (2, 5)
    train_n_ue: int = 25
    max_agents: int = 6

    def validate(self) -> None | list[ValueError]:
        """
        Validate the configuration settings. Valid configurations return `None`. A list of `ValueError`'s will be
        returned if invalid settings are present

        Returns
        -------
        `None | list[ValueError]`
        """

        errors: list[ValueError] = []
        if self.tau_f < 1:
            errors.append(ValueError("tau_f should be at least 1"))

        if self.alpha_f < 0 or self.alpha_f > 1:
            errors.append(ValueError("alpha_f should be between 0 and 1"))

        if not self.codebook_sizes or any(k < 1 for k in self.codebook_sizes):
            errors.append(ValueError("codebook_sizes should be a non empty list of positive team sizes"))

        low, high = (self.train_map_range + (0, 0))[:2]
        if len(self.train_map_range) != 2 or low < 1 or high < low:
            errors.append(ValueError("train_map_range should be an increasing pair of positive counts"))
        elif high > self.max_agents:
            errors.append(ValueError("train_map_range should not exceed max_agents"))

        if self.train_n_ue < 1:
            errors.append(ValueError("train_n_ue should be at least 1"))

        if len(errors) > 0:
            return errors

        return None


@dataclass
class ExperimentConfig:
    """
    Harness settings.

    Attributes
    ----------
    name : `str = "mapnet"`
        Run name, used for output file names
    regimes : `tuple[str, ...] = ("codebook", "curriculum", "federated")`
        Regimes trained and evaluated
    episodes : `int = 20`
        Evaluation episodes at desk scale
    compare_seeds : `int = 20`
        Paired seeds of the dynamic comparison
    full_scale : `bool = False`
        Use the full-scale budget of 200 evaluation episodes
    n_ue : `int = 60`
        UEs of evaluation scenarios
    initial_maps : `tuple[int, ...] = ()`
        MAP counts at t = 0 spread over the episodes, empty uses K / K_i
    dynamic_map_management : `bool = False`
        Run the trade-off controller during evaluation
    seed : `int = 0`
        Base seed of the run
    workers : `int = 2`
        Worker processes, 0 runs inline
    refresh : `float = 0.5`
        Progress monitor refresh in seconds
    output_dir : `str = "runs"`
        Directory of checkpoints, records and plots
    check_constraints : `bool = False`
        Assert C1-C8 on every slot
    eval_rewards : `bool = False`
        Compute placement rewards (centroid clustering) during evaluation
    action_mode : `str = "greedy"`
        `greedy` or `sample` action selection of evaluation episodes
    """

    name: str = "mapnet"
    regimes: tuple[str, ...] = ("codebook", "curriculum", "federated")
    episodes: int = 20
    compare_seeds: int = 20
    full_scale: bool = False
    n_ue: int = 60
    initial_maps: tuple[int, ...] = ()
    dynamic_map_management: bool = False
    seed: int = 0
    workers: int = 2
    refresh: float = 0.5
    output_dir: str = "runs"
    check_constraints: bool = False
    eval_rewards: bool = False
    action_mode: str = "greedy"

    @property
    def episode_count(self) -> int:
        return 200 if self.full_scale else self.episodes

    def validate(self) -> None | list[ValueError]:
        """
        Validate the configuration settings. Valid configurations return `None`. A list of `ValueError`'s will be
        returned if invalid settings are present

        Returns
        -------
        `None | list[ValueError]`
        """

        errors: list[ValueError] = []
        _cpu_count = os.cpu_count()
        if _cpu_count is None:
            _cpu_count = 3

        max_workers = max(_cpu_count - 2, 1)
        if self.workers > max_workers:
            errors.append(ValueError(f"Max workers for this platform = {max_workers}"))

        if self.workers < 0:
            errors.append(ValueError("workers should be positive"))

        unknown = [r for r in self.regimes if r not in ("codebook", "curriculum", "federated")]
        if unknown:
            errors.append(ValueError(f"unknown regimes {unknown}"))

        if self.episodes < 1:
            errors.append(ValueError("episodes should be at least 1"))

        if self.compare_seeds < 1:
            errors.append(ValueError("compare_seeds should be at least 1"))

        if self.n_ue < 1:
            errors.append(ValueError("n_ue should be at least 1"))

        if any(m < 1 for m in self.initial_maps):
            errors.append(ValueError("initial_maps should only hold positive counts"))

        if self.refresh < 0:
            errors.append(ValueError("refresh should be positive"))

        if self.action_mode not in ("greedy", "sample"):
            errors.append(ValueError("action_mode should be greedy or sample"))

        if len(errors) > 0:
            return errors

        return None


_SECTIONS = ("scenario", "radio", "tradeoff", "placement", "federation", "experiment")


@dataclass
class MapnetConfig:
    """
    Configuration object for the whole simulator, one attribute per module.

    Methods
    -------
    load_toml(toml: str) -> MapnetConfig
        Load config from a toml file
    override(key: str, value: str) -> MapnetConfig
        Copy with one dotted key replaced by a cli value
    resolved() -> dict
        Every effective value as a nested dict
    config_hash() -> str
        SHA-256 of the canonical resolved config
    validate() -> None | list[ValueError]
        Validate the configuration settings.
    """

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    tradeoff: TradeoffConfig = field(default_factory=TradeoffConfig)
    placement: PlacementConfig = field(default_factory=PlacementConfig)
    federation: FederationConfig = field(default_factory=FederationConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)

    @classmethod
    def load_toml(cls, toml: str) -> MapnetConfig:
        """
        Load config from a toml file

        Parameters
        ----------
        toml : `str`
            Path to the toml file
        """
        try:
            with open(toml, "rb") as f:
                _toml = tomli.load(f)
        except (OSError, tomli.TOMLDecodeError) as e:
            raise ConfigError(f"cannot read config {toml}: {e}") from e

        if "mapnet" not in _toml:
            raise ConfigError(f"{toml} has no [mapnet] table")

        return cls.from_dict(_toml["mapnet"])

    @classmethod
    def from_dict(cls, table: dict[str, Any]) -> MapnetConfig:
        unknown = set(table) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections {sorted(unknown)}")

        return _build(cls, table, "mapnet")

    def override(self, key: str, value: str) -> MapnetConfig:
        """
        Copy of the config with `key` (e.g. `scenario.region.x_max`) set from the string `value`.

        Parameters
        ----------
        key : `str`
            Dotted path below the root table
        value : `str`
            Raw cli value, coerced to the type of the field
        """

        path = key.split(".")
        return _replace_path(self, path, value, key)

    def resolved(self) -> dict[str, Any]:
        return _plain(asdict(self))

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.resolved(), sort_keys=True).encode()).hexdigest()

    def validate(self) -> None | list[ValueError]:
        """
        Validate the configuration settings. Valid configurations return `None`. A list of `ValueError`'s will be
        returned if invalid settings are present

        Returns
        -------
        `None | list[ValueError]`
        """

        errors: list[ValueError] = []
        for name in _SECTIONS:
            section_errors = getattr(self, name).validate()
            if section_errors is not None:
                errors.extend(section_errors)

        if self.federation.max_agents > self.scenario.max_maps:
            errors.append(ValueError("federation.max_agents should not exceed scenario.max_maps"))

        if (
            self.experiment.dynamic_map_management
            and "curriculum" in self.experiment.regimes
            and self.scenario.max_maps > self.federation.max_agents
        ):
            errors.append(ValueError("dynamic curriculum runs need federation.max_agents >= scenario.max_maps"))

        if len(errors) > 0:
            return errors

        return None


def _build(cls: Any, table: dict[str, Any], path: str) -> Any:
    hints = get_type_hints(cls)
    names = {f.name for f in fields(cls)}
    unknown = set(table) - names
    if unknown:
        raise ConfigError(f"unknown keys in [{path}]: {sorted(unknown)}")

    kwargs: dict[str, Any] = {}
    for name, raw in table.items():
        kind = hints[name]
        if is_dataclass(kind):
            if not isinstance(raw, dict):
                raise ConfigError(f"{path}.{name} should be a table")
            kwargs[name] = _build(kind, raw, f"{path}.{name}")
        else:
            kwargs[name] = _coerce(kind, raw, f"{path}.{name}")

    return cls(**kwargs)


def _replace_path(obj: Any, path: list[str], value: str, key: str) -> Any:
    hints = get_type_hints(type(obj))
    name = path[0]
    if name not in hints:
        raise ConfigError(f"unknown config key {key}")

    kind = hints[name]
    if len(path) == 1:
        if is_dataclass(kind):
            raise ConfigError(f"{key} is a table, set one of its keys")
        return replace(obj, **{name: _coerce(kind, value, key)})

    if not is_dataclass(kind):
        raise ConfigError(f"unknown config key {key}")

    return replace(obj, **{name: _replace_path(getattr(obj, name), path[1:], value, key)})


def _coerce(kind: Any, raw: Any, key: str) -> Any:
    """Convert a toml or cli value to the declared field type"""

    args = getattr(kind, "__args__", ())
    origin = getattr(kind, "__origin__", None)
    try:
        if isinstance(kind, types.UnionType):
            non_null = [a for a in args if a is not type(None)]
            if raw is None or (isinstance(raw, str) and raw.lower() in ("none", "")):
                return None
            return _coerce(non_null[0], raw, key)

        if origin is tuple:
            items = raw.split(",") if isinstance(raw, str) else list(raw)
            items = [i for i in items if not (isinstance(i, str) and i.strip() == "")]
            element = args[0]
            return tuple(_coerce(element, i.strip() if isinstance(i, str) else i, key) for i in items)

        if kind is bool:
            if isinstance(raw, bool):
                return raw
            if str(raw).lower() in ("true", "1", "yes", "on"):
                return True
            if str(raw).lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)

        if kind is int:
            if isinstance(raw, bool) or (isinstance(raw, float) and not raw.is_integer()):
                raise ValueError(raw)
            return int(raw)

        if kind is float:
            if isinstance(raw, bool):
                raise ValueError(raw)
            return float(raw)

        if kind is str:
            return str(raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key}: cannot convert {raw!r} to {kind}") from e

    raise ConfigError(f"{key}: unsupported field type {kind}")


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}

    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]

    return obj
