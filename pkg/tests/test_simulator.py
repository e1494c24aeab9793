"""Test the simulator.py module"""

from pathlib import Path

import pytest
from pytest import fixture

from mapnet.config import MapnetConfig
from mapnet.errors import CheckpointError
from mapnet.experiments import evaluation_jobs
from mapnet.jobs import EpisodeJob, EpisodeResult
from mapnet.simulator import SimulationStatistics, Simulator, run_jobs


@fixture
def stats() -> SimulationStatistics:
    """MAP network SimulationStatistics"""

    return SimulationStatistics.new(total_episodes=3)


@fixture
def result() -> EpisodeResult:
    """finished episode of two slots"""

    return EpisodeResult(
        arm="codebook",
        episode=0,
        rows=[
            {"arm": "codebook", "episode": 0, "t": 0, "sum_rate": 2e9},
            {"arm": "codebook", "episode": 0, "t": 1, "sum_rate": 4e9},
        ],
        service_time_seconds=3.0,
    )


class TestSimulationStatistics:
    """Test SimulationStatistics"""

    @staticmethod
    def test_total_episodes(stats: SimulationStatistics) -> None:
        """test total_episodes"""

        assert stats.episodes_done == 0
        assert stats.episodes_failed == 0
        assert stats.average_seconds_per_episode == 0.0
        assert stats.total_episodes == 3
        assert stats.episodes_processed == 0

        stats.episodes_done = 1
        stats.episodes_failed = 2
        assert stats.episodes_processed == 3

    @staticmethod
    def test_update(stats: SimulationStatistics, result: EpisodeResult) -> None:
        """test update"""

        stats.update(result)
        assert stats.episodes_done == 1
        assert stats.episodes_failed == 0
        assert stats.average_seconds_per_episode == 3.0
        assert stats.mean_sum_rate == pytest.approx(3e9)

        failed = EpisodeResult("codebook", 1, [], 5.0, error=CheckpointError("gone"))
        stats.update(failed)

        assert stats.episodes_done == 1
        assert stats.episodes_failed == 1
        assert stats.average_seconds_per_episode == 4.0
        assert stats.mean_sum_rate == pytest.approx(3e9)

    @staticmethod
    def test_render(stats: SimulationStatistics, result: EpisodeResult) -> None:
        """test render"""

        stats.update(result)
        text = stats.render()
        assert "1/3" in text
        assert "3000.000" in text
        assert "MAP Network Simulator" in text


class TestSimulator:
    """Test Simulator and run_jobs"""

    @staticmethod
    def test_inline_rows_ordered(trained_config: MapnetConfig) -> None:
        """test inline runs return every slot in (arm, episode, t) order"""

        jobs = evaluation_jobs(trained_config, "federated", "federated", 2, dynamic=False)
        jobs += evaluation_jobs(trained_config, "codebook", "codebook", 2, dynamic=False)
        rows = run_jobs(trained_config, list(reversed(jobs)), progress=False)

        slots = trained_config.scenario.slot_count
        assert len(rows) == 4 * slots
        keys = [(row["arm"], row["episode"], row["t"]) for row in rows]
        assert keys == sorted(keys)
        assert keys[0] == ("codebook", 0, 0)

    @staticmethod
    def test_from_config(trained_config: MapnetConfig) -> None:
        """test workers = 0 runs without an engine"""

        simulator = Simulator.from_config(trained_config, [], progress=False)
        assert simulator.engine is None
        assert len(simulator.workers) == 1
        assert simulator.stats.total_episodes == 0

    @staticmethod
    def test_error_reraised(trained_config: MapnetConfig, tmp_path: Path) -> None:
        """test the first episode error propagates"""

        job = EpisodeJob(arm="federated", episode=0, seed=1, registry_dir=str(tmp_path), initial_maps=1)
        with pytest.raises(CheckpointError):
            run_jobs(trained_config, [job], progress=False)
