"""federation"""

from __future__ import annotations
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any
import json
import logging

import numpy as np
import torch
from torch.nn.utils import parameters_to_vector, vector_to_parameters

from mapnet.checkpoint import load_checkpoint, save_checkpoint
from mapnet.config import MapnetConfig
from mapnet.environment import PolicySelector
from mapnet.errors import CheckpointError, FederationError, PolicyNotFoundError
from mapnet.policy import ArchitectureDescriptor, PlacementPolicy, PolicyParameters
from mapnet.ppo import TrainingScenario, TrainingState
from mapnet.scenario import NetworkState


logger = logging.getLogger(__name__)

FEDERATED_KEY = "f"
INDEX_FILE = "index.json"


class Regime(str, Enum):
    CODEBOOK = "codebook"
    CURRICULUM = "curriculum"
    FEDERATED = "federated"


def operational_complexity(regime: Regime | str, max_maps: int) -> int:
    """
    Policies the regime has to maintain for up to `max_maps` MAPs: M(M+1)/2 for the codebook, M for the curriculum
    and a single one for the federated policy.
    """

    if max_maps < 1:
        raise ValueError("max_maps should be at least 1")

    regime = Regime(regime)
    if regime is Regime.CODEBOOK:
        return max_maps * (max_maps + 1) // 2
    if regime is Regime.CURRICULUM:
        return max_maps
    return 1


def operational_efficiency(sum_rate: float, regime: Regime | str, max_maps: int) -> float:
    """eta = R / O_c"""

    return sum_rate / operational_complexity(regime, max_maps)


def federated_average(
    w_global: np.ndarray, agent_weights: list[np.ndarray], alpha_f: float, m_s: int | None = None
) -> np.ndarray:
    """
    alpha_f w + (1 - alpha_f) / M_s sum_i w_i

    Parameters
    ----------
    w_global : `np.ndarray`
        Current global weights
    agent_weights : `list[np.ndarray]`
        Local weights of the M_s participating agents
    alpha_f : `float`
        Retention rate of the global weights
    m_s : `int | None`
        Number of agents, `len(agent_weights)` by default

    Returns
    -------
    `np.ndarray`
    """

    if not agent_weights:
        raise FederationError("no agent weights to aggregate")

    m_s = len(agent_weights) if m_s is None else m_s
    if m_s != len(agent_weights):
        raise FederationError(f"M_s = {m_s} but {len(agent_weights)} agent weight vectors")

    if any(w.shape != w_global.shape for w in agent_weights):
        raise FederationError("weight vectors have different lengths")

    if not 0.0 <= alpha_f <= 1.0:
        raise FederationError("alpha_f should be between 0 and 1")

    return alpha_f * w_global + (1.0 - alpha_f) / m_s * np.sum(agent_weights, axis=0)


def policy_vector(policy: PlacementPolicy) -> np.ndarray:
    return parameters_to_vector(policy.parameters()).detach().double().numpy().copy()


def write_back(policy: PlacementPolicy, weights: np.ndarray) -> None:
    with torch.no_grad():
        vector_to_parameters(torch.as_tensor(weights, dtype=policy.dtype), policy.parameters())


class FederationHook:
    """
    Regime hook of the federated regime. At the first batch barrier at or past every multiple of `tau_f` agent
    steps, the agents that acted since the previous aggregation are averaged into pi_f and every agent is
    overwritten with pi_f.

    Attributes
    ----------
    tau_f : `int`
    alpha_f : `float`
    global_weights : `np.ndarray`
        pi_f
    version : `int`
        Aggregations so far
    next_at : `int`
        Step of the next aggregation
    """

    tau_f: int
    alpha_f: float
    global_weights: np.ndarray
    version: int
    next_at: int

    def __init__(self, tau_f: int, alpha_f: float, global_weights: np.ndarray) -> None:
        self.tau_f = tau_f
        self.alpha_f = alpha_f
        self.global_weights = global_weights
        self.version = 0
        self.next_at = tau_f

    @classmethod
    def new(cls, run: TrainingState, config: MapnetConfig) -> FederationHook:
        """Start pi_f from the first agent and give every agent the same initial weights"""

        first = run.agents[sorted(run.agents)[0]]
        hook = cls(config.federation.tau_f, config.federation.alpha_f, policy_vector(first))
        for policy in run.agents.values():
            write_back(policy, hook.global_weights)
        return hook

    def after_batch(self, run: TrainingState) -> list[dict[str, Any]]:
        if run.step < self.next_at:
            return []

        participants = sorted(run.participants) or sorted(run.agents)
        self.global_weights = federated_average(
            self.global_weights, [policy_vector(run.agents[key]) for key in participants], self.alpha_f
        )
        for policy in run.agents.values():
            write_back(policy, self.global_weights)

        self.version += 1
        self.next_at = (run.step // self.tau_f + 1) * self.tau_f
        run.participants.clear()
        logger.info("aggregation %d at step %d over %d agents", self.version, run.step, len(participants))
        return [
            {
                "regime": run.regime,
                "episode": run.episode,
                "step": run.step,
                "event": "aggregate",
                "version": self.version,
                "participants": len(participants),
            }
        ]

    def parameters(self, arch: ArchitectureDescriptor, step: int) -> PolicyParameters:
        return PolicyParameters(weights=self.global_weights.copy(), architecture=arch, version=self.version, step=step)

    def state_dict(self) -> dict[str, Any]:
        return {"global_weights": self.global_weights, "version": self.version, "next_at": self.next_at}

    def load_state_dict(self, table: dict[str, Any]) -> None:
        self.global_weights = np.asarray(table["global_weights"], dtype=np.float64)
        self.version = int(table["version"])
        self.next_at = int(table["next_at"])


def agent_keys(regime: Regime | str, config: MapnetConfig, size: int | None = None) -> list[str]:
    """
    Keys of the agents trained in one run: `k/slot` for a codebook entry of team size `size`, the MAP slot for the
    curriculum and `local/slot` for the federated local models.
    """

    regime = Regime(regime)
    if regime is Regime.CODEBOOK:
        if size is None:
            raise ValueError("codebook agents need a team size")
        return [f"{size}/{slot}" for slot in range(1, size + 1)]

    if regime is Regime.CURRICULUM:
        return [str(slot) for slot in range(1, config.federation.max_agents + 1)]

    return [f"local/{slot}" for slot in range(1, config.federation.train_map_range[1] + 1)]


def sample_training_scenario(
    regime: Regime | str, rng: np.random.Generator, config: MapnetConfig, size: int | None = None
) -> TrainingScenario:
    """
    Training episode of a regime: `train_n_ue` UEs, training mobility and blockage, and M_s MAPs. The codebook uses
    the fixed team size of the entry being trained; the curriculum and federated regimes draw M_s uniformly from
    `train_map_range`. The curriculum deploys a random subset of its agents, the federated regime its first M_s
    local models.

    Returns
    -------
    `TrainingScenario`
    """

    regime = Regime(regime)
    low, high = config.federation.train_map_range
    if regime is Regime.CODEBOOK:
        if size is None:
            raise ValueError("codebook scenarios need a team size")
        deployed = size
        agents = agent_keys(regime, config, size)
    elif regime is Regime.CURRICULUM:
        deployed = int(rng.integers(low, high + 1))
        chosen = np.sort(rng.choice(config.federation.max_agents, size=deployed, replace=False)) + 1
        agents = [str(slot) for slot in chosen]
    else:
        deployed = int(rng.integers(low, high + 1))
        agents = agent_keys(regime, config)[:deployed]

    scenario = replace(
        config.scenario,
        n_ue=config.federation.train_n_ue,
        ue_speed=config.placement.train_ue_speed,
        blockage_prob=config.placement.train_blockage_prob,
        slot_count=config.placement.horizon,
        seed=int(rng.integers(2**31 - 1)),
    )
    return TrainingScenario(scenario=scenario, agents=agents)


def _file_name(regime: Regime, key: str) -> str:
    return f"{regime.value}-{key.replace('/', '-')}.mpc"


@dataclass
class PolicyRegistry:
    """
    Trained policies of one regime, as used by the placement policy manager.

    Attributes
    ----------
    regime : `Regime`
    entries : `dict[str, PolicyParameters]`
        `k/slot` for the codebook, the MAP slot for the curriculum, `f` for the federated policy
    config_hash : `str`
        Hash of the configuration the policies were trained with

    Methods
    -------
    get(key) -> PolicyParameters
    policy(key) -> PlacementPolicy
        Cached torch module of an entry
    save(directory)
        Checkpoint files plus `index.json`
    load(directory) -> PolicyRegistry
        Verify the hashes of `index.json` and read every entry
    """

    regime: Regime
    entries: dict[str, PolicyParameters] = field(default_factory=dict)
    config_hash: str = ""
    _policies: dict[str, PlacementPolicy] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, key: str) -> PolicyParameters:
        try:
            return self.entries[key]
        except KeyError:
            raise PolicyNotFoundError(f"{self.regime.value} registry has no policy {key}") from None

    def policy(self, key: str) -> PlacementPolicy:
        if key not in self._policies:
            self._policies[key] = self.get(key).to_policy()
        return self._policies[key]

    def codebook_sizes(self) -> list[int]:
        return sorted({int(key.split("/")[0]) for key in self.entries})

    @property
    def complexity(self) -> int:
        """O_c of the registry, with M the largest codebook team or the number of curriculum slots"""

        if self.regime is Regime.CODEBOOK:
            return operational_complexity(self.regime, max(self.codebook_sizes(), default=1))
        if self.regime is Regime.CURRICULUM:
            return operational_complexity(self.regime, max(len(self.entries), 1))
        return 1

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        index: dict[str, Any] = {"regime": self.regime.value, "config_hash": self.config_hash, "entries": {}}
        for key in sorted(self.entries):
            name = _file_name(self.regime, key)
            digest = save_checkpoint(directory / name, self.entries[key], self.regime.value, key)
            index["entries"][key] = {"file": name, "sha256": digest}

        (directory / INDEX_FILE).write_text(json.dumps(index, indent=2, sort_keys=True))
        logger.info("saved %d %s policies to %s", len(self.entries), self.regime.value, directory)
        return directory

    @classmethod
    def load(cls, directory: str | Path) -> PolicyRegistry:
        directory = Path(directory)
        try:
            index = json.loads((directory / INDEX_FILE).read_text())
            regime = Regime(index["regime"])
            listed = index["entries"]
        except (OSError, ValueError, KeyError) as e:
            raise CheckpointError(f"cannot read policy registry {directory}: {e}") from e

        entries = {}
        for key, item in sorted(listed.items()):
            params, header = load_checkpoint(directory / item["file"], sha256=item["sha256"])
            if header["key"] != key or header["regime"] != regime.value:
                raise CheckpointError(f"{item['file']} holds {header['regime']} {header['key']}, index says {key}")
            entries[key] = params

        return cls(regime=regime, entries=entries, config_hash=index.get("config_hash", ""))


def select_key(registry: PolicyRegistry, m_s: int, i: int, rng: np.random.Generator | None = None) -> str:
    """
    Registry entry for the `i`-th MAP of a team of `m_s`. Codebook slots count the active MAPs in ascending id;
    a team larger (smaller) than every trained size uses a random entry of the largest (smallest) size. Curriculum
    entries are per MAP id, the federated policy serves everyone.
    """

    if registry.regime is Regime.FEDERATED:
        return FEDERATED_KEY

    if registry.regime is Regime.CURRICULUM:
        return str(i)

    sizes = registry.codebook_sizes()
    if not sizes:
        raise PolicyNotFoundError("empty codebook")

    if sizes[0] <= m_s <= sizes[-1]:
        return f"{m_s}/{i}"

    size = sizes[-1] if m_s > sizes[-1] else sizes[0]
    rng = np.random.default_rng() if rng is None else rng
    return f"{size}/{int(rng.integers(1, size + 1))}"


def select_policy(
    registry: PolicyRegistry, m_s: int, i: int, rng: np.random.Generator | None = None
) -> PolicyParameters:
    """Weights of `select_key`; raises `PolicyNotFoundError` when the registry has no such entry"""

    return registry.get(select_key(registry, m_s, i, rng))


def registry_selector(registry: PolicyRegistry) -> PolicySelector:
    """
    Placement policy manager of an evaluation episode: picks the policy of every active MAP from `registry`,
    codebook fallbacks drawing from the scenario's control stream.
    """

    def selector(state: NetworkState) -> dict[int, PlacementPolicy]:
        m_s = state.deployed
        chosen: dict[int, PlacementPolicy] = {}
        for rank, map_id in enumerate(state.active_ids, start=1):
            slot = rank if registry.regime is Regime.CODEBOOK else map_id
            key = select_key(registry, m_s, slot, state.streams.control)
            state.map_by_id(map_id).policy_id = key
            chosen[map_id] = registry.policy(key)
        return chosen

    return selector


def registry_from_training(
    regime: Regime | str, runs: list[TrainingState], hook: FederationHook | None = None, config_hash: str = ""
) -> PolicyRegistry:
    """
    Collect the trained policies: every codebook run contributes its `k/slot` agents, the curriculum its MAP slots
    and the federated regime pi_f only.
    """

    regime = Regime(regime)
    registry = PolicyRegistry(regime=regime, config_hash=config_hash)
    for run in runs:
        if regime is Regime.FEDERATED:
            if hook is None:
                raise FederationError("the federated registry needs its aggregation hook")
            arch = next(iter(run.agents.values())).arch
            registry.entries[FEDERATED_KEY] = hook.parameters(arch, run.step)
        else:
            registry.entries.update(run.parameters())

    return registry
