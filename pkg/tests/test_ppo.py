"""Test the ppo.py and environment.py modules"""

from dataclasses import replace

import numpy as np
import pytest
import torch

from mapnet.config import MapnetConfig
from mapnet.environment import NetworkSimulation
from mapnet.errors import TrainingDivergedError
from mapnet.federation import Regime, agent_keys, sample_training_scenario
from mapnet.policy import ArchitectureDescriptor, PlacementPolicy
from mapnet.ppo import (
    PPOLearner,
    TrainingState,
    Trajectory,
    discounted_returns,
    evaluate_placement,
    rollout,
    train_ppo,
)


def federated_run(config: MapnetConfig, seed: int = 0) -> TrainingState:
    return TrainingState.new("federated", agent_keys(Regime.FEDERATED, config), config, seed)


def federated_sampler(config: MapnetConfig):
    return lambda rng: sample_training_scenario(Regime.FEDERATED, rng, config)


def _arch(config: MapnetConfig) -> ArchitectureDescriptor:
    return ArchitectureDescriptor.from_config(config.placement)


def flat(policy: PlacementPolicy) -> np.ndarray:
    return torch.cat([p.detach().flatten() for p in policy.parameters()]).numpy().copy()


class TestReturns:
    """Test discounted_returns"""

    @staticmethod
    def test_example() -> None:
        """test the backward recursion"""

        assert discounted_returns([1.0, 1.0, 1.0], 0.5) == pytest.approx([1.75, 1.5, 1.0])

    @staticmethod
    def test_no_discount() -> None:
        """test gamma 0 gives the immediate rewards"""

        assert discounted_returns([3.0, -1.0], 0.0) == pytest.approx([3.0, -1.0])
        assert discounted_returns([], 0.6).size == 0


class TestRollout:
    """Test rollout and NetworkSimulation"""

    @staticmethod
    def test_trajectories(tiny_config: MapnetConfig) -> None:
        """test one step per deployed agent and slot"""

        run = federated_run(tiny_config)
        training = sample_training_scenario(Regime.CODEBOOK, np.random.default_rng(0), tiny_config, size=2)
        training = replace(training, agents=["local/1", "local/2"])
        trajectories, slot_rewards = rollout(training, run.agents, tiny_config)

        assert set(trajectories) == {"local/1", "local/2"}
        assert all(len(tr) == tiny_config.placement.horizon for tr in trajectories.values())
        assert len(slot_rewards) == tiny_config.placement.horizon
        assert all(np.isfinite(slot_rewards))

    @staticmethod
    def test_slot_results(tiny_config: MapnetConfig) -> None:
        """test the slot loop keeps M_s fixed without a controller"""

        policy = PlacementPolicy.new(_arch(tiny_config))
        sim = NetworkSimulation.new(
            tiny_config, tiny_config.scenario, 2, lambda state: {i: policy for i in state.active_ids}, check=True
        )
        results = sim.run()

        assert [r.t for r in results] == list(range(tiny_config.scenario.slot_count))
        assert all(r.deployed == 2 for r in results)
        assert all([tr.map_id for tr in r.transitions] == [1, 2] for r in results)
        assert all(r.sum_rate >= 0.0 for r in results)
        assert all(r.decisions == [] and r.thetas == {} for r in results)

    @staticmethod
    def test_targets_cached(tiny_config: MapnetConfig) -> None:
        """test centroids are reused while the UEs and M_s stay put"""

        static = replace(tiny_config.scenario, ue_speed=0.0, blockage_prob=0.0)
        policy = PlacementPolicy.new(_arch(tiny_config))
        sim = NetworkSimulation.new(tiny_config, static, 2, lambda state: {i: policy for i in state.active_ids})
        first = sim.targets()
        sim.step()
        second = sim.targets()
        assert all(np.array_equal(first[i], second[i]) for i in first)


class TestPPOLearner:
    """Test PPOLearner"""

    @staticmethod
    def test_zero_learning_rate(tiny_config: MapnetConfig) -> None:
        """test an update with learning rate 0 leaves the weights alone"""

        config = replace(tiny_config, placement=replace(tiny_config.placement, learning_rate=0.0))
        run = federated_run(config)
        training = sample_training_scenario(Regime.FEDERATED, np.random.default_rng(1), config)
        trajectories, _ = rollout(training, run.agents, config)

        key = training.agents[0]
        before = flat(run.agents[key])
        stats = run.learners[key].update([trajectories[key]])
        assert np.array_equal(flat(run.agents[key]), before)
        assert set(stats) == {"policy_loss", "value_loss", "entropy"}

    @staticmethod
    def test_update_moves_weights(tiny_config: MapnetConfig) -> None:
        """test a regular update changes the weights"""

        run = federated_run(tiny_config)
        training = sample_training_scenario(Regime.FEDERATED, np.random.default_rng(1), tiny_config)
        trajectories, _ = rollout(training, run.agents, tiny_config)

        key = training.agents[0]
        before = flat(run.agents[key])
        run.learners[key].update([trajectories[key]])
        assert not np.array_equal(flat(run.agents[key]), before)

    @staticmethod
    def test_empty_batch(tiny_config: MapnetConfig) -> None:
        """test nothing to learn from"""

        learner = PPOLearner(PlacementPolicy.new(_arch(tiny_config)), tiny_config.placement)
        assert learner.update([Trajectory()]) == {}


class TestTrainPPO:
    """Test train_ppo"""

    @staticmethod
    def test_curve_and_budget(tiny_config: MapnetConfig) -> None:
        """test training stops at the first batch past the budget and logs one row per episode"""

        batches = []
        run = train_ppo(
            federated_run(tiny_config),
            federated_sampler(tiny_config),
            tiny_config,
            on_batch=lambda state: batches.append(state.step),
        )

        assert run.step >= tiny_config.placement.total_steps
        assert run.episode == len(run.curve) == len(batches)
        assert [row["episode"] for row in run.curve] == list(range(1, run.episode + 1))
        assert all(row["step"] == row["deployed"] * tiny_config.placement.horizon for row in run.curve[:1])
        assert batches == [row["step"] for row in run.curve]

    @staticmethod
    def test_deterministic(tiny_config: MapnetConfig) -> None:
        """test the same seed trains the same weights"""

        first = train_ppo(federated_run(tiny_config, seed=3), federated_sampler(tiny_config), tiny_config)
        second = train_ppo(federated_run(tiny_config, seed=3), federated_sampler(tiny_config), tiny_config)

        assert [row["reward"] for row in first.curve] == [row["reward"] for row in second.curve]
        for key in first.agents:
            assert np.array_equal(flat(first.agents[key]), flat(second.agents[key]))

    @staticmethod
    def test_hook_rows(tiny_config: MapnetConfig) -> None:
        """test hook events are appended to the curve"""

        class Counter:
            calls = 0

            def after_batch(self, run: TrainingState) -> list[dict]:
                Counter.calls += 1
                return [{"event": "mark", "step": run.step}]

        run = train_ppo(federated_run(tiny_config), federated_sampler(tiny_config), tiny_config, hook=Counter())
        marks = [row for row in run.curve if row["event"] == "mark"]
        assert len(marks) == Counter.calls == run.episode

    @staticmethod
    def test_divergence(tiny_config: MapnetConfig, monkeypatch: pytest.MonkeyPatch) -> None:
        """test a non finite loss stops training after handing over the last weights"""

        def nan_loss(self, *args, **kwargs):
            return torch.tensor(float("nan"), requires_grad=True), {}

        monkeypatch.setattr(PPOLearner, "loss", nan_loss)
        handed = []
        with pytest.raises(TrainingDivergedError):
            train_ppo(
                federated_run(tiny_config),
                federated_sampler(tiny_config),
                tiny_config,
                on_diverge=lambda state: handed.append(state.step),
            )
        assert len(handed) == 1

    @staticmethod
    def test_state_dict_round_trip(tiny_config: MapnetConfig) -> None:
        """test a resumed run continues exactly like an uninterrupted one"""

        config = replace(tiny_config, placement=replace(tiny_config.placement, total_steps=16))
        straight = train_ppo(federated_run(config), federated_sampler(config), config)

        halfway = train_ppo(federated_run(config), federated_sampler(config), config, total_steps=8)
        resumed = federated_run(config)
        resumed.load_state_dict(halfway.state_dict())
        resumed.curve = list(halfway.curve)
        resumed = train_ppo(resumed, federated_sampler(config), config)

        assert resumed.step == straight.step
        assert [row["reward"] for row in resumed.curve] == [row["reward"] for row in straight.curve]
        for key in straight.agents:
            assert np.allclose(flat(resumed.agents[key]), flat(straight.agents[key]))


class TestEvaluatePlacement:
    """Test evaluate_placement"""

    @staticmethod
    def test_distance(tiny_config: MapnetConfig) -> None:
        """test the mean distance to the assigned centroid"""

        policy = PlacementPolicy.new(_arch(tiny_config))
        first = evaluate_placement(policy, tiny_config, episodes=2, seed=1)
        second = evaluate_placement(policy, tiny_config, episodes=2, seed=1)
        assert first == second
        assert first > 0.0

    @staticmethod
    def test_team_and_random_reference(tiny_config: MapnetConfig) -> None:
        """test a two policy team and the uniform random reference are reproducible"""

        team = [PlacementPolicy.new(_arch(tiny_config), seed) for seed in (0, 1)]
        assert evaluate_placement(team, tiny_config, episodes=2, seed=3) == evaluate_placement(
            team, tiny_config, episodes=2, seed=3
        )

        random = evaluate_placement(team[0], tiny_config, episodes=2, mode="random", seed=3)
        assert random == evaluate_placement(team[0], tiny_config, episodes=2, mode="random", seed=3)
        assert random > 0.0
