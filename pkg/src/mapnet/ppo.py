"""ppo"""

from __future__ import annotations
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from typing import Any, Protocol
import logging

import numpy as np
import torch

from mapnet.config import MapnetConfig, PlacementConfig, ScenarioConfig
from mapnet.environment import NetworkSimulation, Transition
from mapnet.errors import TrainingDivergedError
from mapnet.observation import Observation
from mapnet.policy import ArchitectureDescriptor, PlacementPolicy, PolicyParameters, observation_tensors
from mapnet.scenario import NetworkState


logger = logging.getLogger(__name__)


@dataclass
class Trajectory:
    """
    Steps of one agent over one episode.

    Attributes
    ----------
    observations : `list[Observation]`
    actions : `list[int]`
    log_probs : `list[float]`
        Log-probability of each action under the policy that acted
    values : `list[float]`
        Value estimates at acting time
    rewards : `list[float]`
    """

    observations: list[Observation] = field(default_factory=list)
    actions: list[int] = field(default_factory=list)
    log_probs: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.actions)

    def append(self, transition: Transition) -> None:
        self.observations.append(transition.observation)
        self.actions.append(transition.action)
        self.log_probs.append(transition.log_prob)
        self.values.append(transition.value)
        self.rewards.append(transition.reward)

    def returns(self, gamma: float) -> np.ndarray:
        return discounted_returns(self.rewards, gamma)


def discounted_returns(rewards: list[float] | np.ndarray, gamma: float) -> np.ndarray:
    """Monte-Carlo return of every step, G_t = r_t + gamma G_{t+1}"""

    out = np.zeros(len(rewards))
    running = 0.0
    for k in range(len(rewards) - 1, -1, -1):
        running = rewards[k] + gamma * running
        out[k] = running
    return out


class PPOLearner:
    """
    Clipped objective actor-critic updates of one agent.

    Attributes
    ----------
    policy : `PlacementPolicy`
    cfg : `PlacementConfig`
    optimizer : `torch.optim.Adam`
    """

    policy: PlacementPolicy
    cfg: PlacementConfig
    optimizer: torch.optim.Adam

    def __init__(self, policy: PlacementPolicy, cfg: PlacementConfig) -> None:
        self.policy = policy
        self.cfg = cfg
        self.optimizer = torch.optim.Adam(policy.parameters(), lr=cfg.learning_rate)

    def loss(
        self,
        tensors: tuple[torch.Tensor, ...],
        actions: torch.Tensor,
        old_log_probs: torch.Tensor,
        returns: torch.Tensor,
        advantages: torch.Tensor,
    ) -> tuple[torch.Tensor, dict[str, float]]:
        logits, value = self.policy(*tensors)
        dist = torch.distributions.Categorical(logits=logits)
        log_probs = dist.log_prob(actions)
        ratio = torch.exp(log_probs - old_log_probs)
        clipped = torch.clamp(ratio, 1.0 - self.cfg.clip_ratio, 1.0 + self.cfg.clip_ratio)
        policy_loss = -torch.min(ratio * advantages, clipped * advantages).mean()
        value_loss = torch.mean((value - returns) ** 2)
        entropy = dist.entropy().mean()
        loss = policy_loss + self.cfg.value_coef * value_loss - self.cfg.entropy_coef * entropy
        stats = {
            "policy_loss": float(policy_loss.detach()),
            "value_loss": float(value_loss.detach()),
            "entropy": float(entropy.detach()),
        }
        return loss, stats

    def update(self, trajectories: list[Trajectory]) -> dict[str, float]:
        """
        Run `epochs` full batch passes over `trajectories`. The advantage is the discounted return minus the value
        estimate recorded while acting.

        Raises
        ------
        `TrainingDivergedError`
            The loss became non finite; the weights are left as they were before the failing pass
        """

        steps = [tr for tr in trajectories if len(tr) > 0]
        if not steps:
            return {}

        dtype = self.policy.dtype
        observations = [o for tr in steps for o in tr.observations]
        tensors = observation_tensors(observations, self.policy.arch, dtype=dtype)
        actions = torch.as_tensor(np.concatenate([tr.actions for tr in steps]), dtype=torch.long)
        old_log_probs = torch.as_tensor(np.concatenate([tr.log_probs for tr in steps]), dtype=dtype)
        returns_np = np.concatenate([tr.returns(self.cfg.gamma) for tr in steps])
        values_np = np.concatenate([tr.values for tr in steps])
        returns = torch.as_tensor(returns_np, dtype=dtype)
        advantages = torch.as_tensor(returns_np - values_np, dtype=dtype)

        stats: dict[str, float] = {}
        for _ in range(self.cfg.epochs):
            loss, stats = self.loss(tensors, actions, old_log_probs, returns, advantages)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(f"non finite loss {float(loss.detach())}")
            self.optimizer.zero_grad()
            loss.backward()
            if self.cfg.max_grad_norm > 0:
                torch.nn.utils.clip_grad_norm_(self.policy.parameters(), self.cfg.max_grad_norm)
            self.optimizer.step()

        return stats


@dataclass
class TrainingScenario:
    """
    One sampled training episode: its world and the agent driving each deployed MAP (MAP ids 1..len(agents)).
    """

    scenario: ScenarioConfig
    agents: list[str]

    @property
    def deployed(self) -> int:
        return len(self.agents)


ScenarioSampler = Callable[[np.random.Generator], TrainingScenario]


class RegimeHook(Protocol):
    def after_batch(self, run: TrainingState) -> list[dict[str, Any]]:
        ...


@dataclass
class TrainingState:
    """
    Everything needed to continue a training run.

    Attributes
    ----------
    regime : `str`
        Curve label, e.g. `federated` or `codebook-3`
    agents : `dict[str, PlacementPolicy]`
    learners : `dict[str, PPOLearner]`
    rng : `np.random.Generator`
        Scenario sampling stream
    step : `int`
        Agent steps taken so far
    episode : `int`
    curve : `list[dict[str, Any]]`
        Training curve rows, one per episode plus hook events
    participants : `set[str]`
        Agents that acted since the last hook event
    """

    regime: str
    agents: dict[str, PlacementPolicy]
    learners: dict[str, PPOLearner]
    rng: np.random.Generator
    step: int = 0
    episode: int = 0
    curve: list[dict[str, Any]] = field(default_factory=list)
    participants: set[str] = field(default_factory=set)

    @classmethod
    def new(cls, regime: str, agent_keys: list[str], config: MapnetConfig, seed: int) -> TrainingState:
        """
        Fresh agents, each seeded from `seed` and its position in `agent_keys`.
        """

        arch = ArchitectureDescriptor.from_config(config.placement)
        seeds = np.random.SeedSequence(seed).spawn(len(agent_keys) + 1)
        agents = {
            key: PlacementPolicy.new(arch, int(s.generate_state(1)[0])) for key, s in zip(agent_keys, seeds[1:])
        }
        return cls(
            regime=regime,
            agents=agents,
            learners={key: PPOLearner(policy, config.placement) for key, policy in agents.items()},
            rng=np.random.default_rng(seeds[0]),
        )

    def parameters(self) -> dict[str, PolicyParameters]:
        return {key: PolicyParameters.from_policy(policy, step=self.step) for key, policy in self.agents.items()}

    def state_dict(self) -> dict[str, Any]:
        return {
            "regime": self.regime,
            "step": self.step,
            "episode": self.episode,
            "rng": self.rng.bit_generator.state,
            "participants": sorted(self.participants),
            "agents": {key: policy.state_dict() for key, policy in self.agents.items()},
            "optimizers": {key: learner.optimizer.state_dict() for key, learner in self.learners.items()},
        }

    def load_state_dict(self, table: dict[str, Any]) -> None:
        self.step = int(table["step"])
        self.episode = int(table["episode"])
        self.rng.bit_generator.state = table["rng"]
        self.participants = set(table["participants"])
        for key, policy in self.agents.items():
            policy.load_state_dict(table["agents"][key])
            self.learners[key].optimizer.load_state_dict(table["optimizers"][key])


def rollout(
    training: TrainingScenario, agents: dict[str, PlacementPolicy], config: MapnetConfig, mode: str = "sample"
) -> tuple[dict[str, Trajectory], list[float]]:
    """
    Play one training episode of `config.placement.horizon` slots.

    Returns
    -------
    `tuple[dict[str, Trajectory], list[float]]`
        Trajectory of every deployed agent and the mean reward of every slot
    """

    slot_agent = {map_id: key for map_id, key in enumerate(training.agents, start=1)}

    def selector(state: NetworkState) -> dict[int, PlacementPolicy]:
        return {i: agents[slot_agent[i]] for i in state.active_ids}

    sim = NetworkSimulation.new(
        config,
        training.scenario,
        training.deployed,
        selector,
        rewards=True,
        mode=mode,
        check=config.experiment.check_constraints,
    )
    trajectories = {key: Trajectory() for key in training.agents}
    slot_rewards: list[float] = []
    for _ in range(config.placement.horizon):
        result = sim.step()
        for tr in result.transitions:
            trajectories[slot_agent[tr.map_id]].append(tr)
        if result.mean_reward is not None:
            slot_rewards.append(result.mean_reward)

    return trajectories, slot_rewards


def train_ppo(
    run: TrainingState,
    sampler: ScenarioSampler,
    config: MapnetConfig,
    hook: RegimeHook | None = None,
    total_steps: int | None = None,
    on_batch: Callable[[TrainingState], None] | None = None,
    on_diverge: Callable[[TrainingState], None] | None = None,
) -> TrainingState:
    """
    Episodic PPO. Batches of `batch_episodes` episodes are collected with the current weights, every agent that
    acted is updated on its own trajectories, then `hook` runs (federation or bookkeeping) and `on_batch` (typically
    a checkpoint). Stops at the first batch boundary at or past `total_steps` agent steps.

    Parameters
    ----------
    run : `TrainingState`
        Fresh or resumed state, updated in place
    sampler : `ScenarioSampler`
        Draws the scenario and deployed agents of every episode
    config : `MapnetConfig`
    hook : `RegimeHook | None`
    total_steps : `int | None`
        Budget in agent steps, `config.placement.total_steps` by default
    on_batch, on_diverge : `Callable[[TrainingState], None] | None`
        Called after every batch, and with the last finite weights before `TrainingDivergedError` propagates

    Returns
    -------
    `TrainingState`
    """

    placement = config.placement
    budget = placement.total_steps if total_steps is None else total_steps
    while run.step < budget:
        batch: dict[str, list[Trajectory]] = {}
        for _ in range(placement.batch_episodes):
            if run.step >= budget:
                break

            training = sampler(run.rng)
            training = replace(training, scenario=replace(training.scenario, slot_count=placement.horizon))
            trajectories, slot_rewards = rollout(training, run.agents, config)
            steps = sum(len(tr) for tr in trajectories.values())
            run.step += steps
            run.episode += 1
            for key, tr in trajectories.items():
                batch.setdefault(key, []).append(tr)
                run.participants.add(key)

            run.curve.append(
                {
                    "regime": run.regime,
                    "episode": run.episode,
                    "step": run.step,
                    "deployed": training.deployed,
                    "reward": float(np.mean(slot_rewards)) if slot_rewards else 0.0,
                    "rewards": [round(r, 6) for r in slot_rewards],
                    "event": None,
                }
            )

        try:
            for key in sorted(batch):
                run.learners[key].update(batch[key])
        except TrainingDivergedError:
            logger.error("%s diverged at step %d", run.regime, run.step)
            if on_diverge is not None:
                on_diverge(run)
            raise

        if hook is not None:
            run.curve.extend(hook.after_batch(run))

        logger.info("%s: step %d/%d, episode %d", run.regime, run.step, budget, run.episode)
        if on_batch is not None:
            on_batch(run)

    return run


def evaluate_placement(
    policy: PlacementPolicy | list[PlacementPolicy],
    config: MapnetConfig,
    episodes: int = 50,
    mode: str = "greedy",
    deployed: int = 2,
    seed: int = 0,
) -> float:
    """
    Mean distance of the MAPs to their assigned centroid over `episodes` static training scenarios. A single policy
    drives every MAP; a team hands its policies to the active MAPs in ascending id order. `mode="random"` gives the
    uniform-random reference.

    Returns
    -------
    `float`
        Meters, averaged over every agent step
    """

    team = policy if isinstance(policy, list) else [policy]

    def selector(state: NetworkState) -> dict[int, PlacementPolicy]:
        return {i: team[k % len(team)] for k, i in enumerate(state.active_ids)}

    distances: list[float] = []
    for episode in range(episodes):
        scenario_seed = int(np.random.SeedSequence([seed, episode]).generate_state(1)[0])
        scenario = replace(
            config.scenario,
            n_ue=config.federation.train_n_ue,
            ue_speed=config.placement.train_ue_speed,
            blockage_prob=config.placement.train_blockage_prob,
            slot_count=config.placement.horizon,
            seed=scenario_seed,
        )
        sim = NetworkSimulation.new(config, scenario, deployed, selector, mode=mode)
        for result in sim.run():
            distances.extend(tr.distance for tr in result.transitions)

    return float(np.mean(distances)) if distances else 0.0
