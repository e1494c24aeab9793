"""Test the experiments.py module"""

from dataclasses import replace

import numpy as np
import pytest

from mapnet.config import MapnetConfig
from mapnet.errors import CheckpointError, EmptyRecordError, RecordFormatError
from mapnet.experiments import (
    RunPaths,
    comparison_report,
    episode_seed,
    initial_maps_for,
    load_curves,
    registry_dir,
    render_summary,
    run_dynamic_comparison,
    run_generalization_eval,
    run_seed,
    run_trace,
    run_training,
    summarize,
)
from mapnet.federation import PolicyRegistry
from mapnet.records import read_records


def synthetic_rows() -> list[dict]:
    rows = []
    rates = {"baseline": [1.0, 4.0], "codebook-tradeoff": [2.0, 3.0], "federated-tradeoff": [3.0, 5.0]}
    for arm, per_episode in rates.items():
        complexity = 1 if arm.startswith("federated") else 3
        for episode, rate in enumerate(per_episode):
            for t in range(2):
                rows.append(
                    {
                        "arm": arm,
                        "episode": episode,
                        "t": t,
                        "deployed": 2,
                        "connected": 5,
                        "sum_rate": rate * 1e9,
                        "eta": rate * 1e9 / complexity,
                        "complexity": complexity,
                    }
                )
    return rows


class TestSeeds:
    """Test run_seed, episode_seed and initial_maps_for"""

    @staticmethod
    def test_seeds(tiny_config: MapnetConfig) -> None:
        """test seeds are stable and distinct"""

        assert run_seed(tiny_config, "federated") == run_seed(tiny_config, "federated")
        assert run_seed(tiny_config, "federated") != run_seed(tiny_config, "curriculum")
        assert episode_seed(tiny_config, 0) != episode_seed(tiny_config, 1)

        other = replace(tiny_config, experiment=replace(tiny_config.experiment, seed=1))
        assert episode_seed(other, 0) != episode_seed(tiny_config, 0)

    @staticmethod
    def test_initial_maps(tiny_config: MapnetConfig) -> None:
        """test M_s(0) cycles through the configured list, K / K_i without one"""

        assert [initial_maps_for(tiny_config, e) for e in range(4)] == [1, 2, 1, 2]
        derived = replace(tiny_config, experiment=replace(tiny_config.experiment, initial_maps=(), n_ue=25))
        assert initial_maps_for(derived, 0) == 3

    @staticmethod
    def test_untrained(tiny_config: MapnetConfig) -> None:
        """test evaluation needs trained policies"""

        with pytest.raises(CheckpointError, match="mapnet train"):
            registry_dir(tiny_config, "codebook")


class TestRunTraining:
    """Test run_training"""

    @staticmethod
    def test_outputs(trained_config: MapnetConfig) -> None:
        """test every regime leaves its registry, resume state and curve"""

        paths = RunPaths.from_config(trained_config)
        entries = {
            regime: sorted(PolicyRegistry.load(paths.policies(regime)).entries)
            for regime in ("codebook", "curriculum", "federated")
        }
        assert entries == {"codebook": ["1/1", "2/1", "2/2"], "curriculum": ["1", "2"], "federated": ["f"]}

        labels = ["codebook-1", "codebook-2", "curriculum", "federated"]
        assert all(paths.resume(label).exists() for label in labels)
        assert sorted(load_curves(trained_config)) == labels

    @staticmethod
    def test_curves(trained_config: MapnetConfig) -> None:
        """test curve files hold a header and the episode rows"""

        header, rows = read_records(RunPaths.from_config(trained_config).curve("federated"))
        assert header["kind"] == "curve"
        assert header["label"] == "federated"
        episodes = [row for row in rows if row["event"] is None]
        assert episodes and all(len(row["rewards"]) == trained_config.placement.horizon for row in episodes)
        assert any(row["event"] == "aggregate" for row in rows)

    @staticmethod
    def test_resume(tiny_config: MapnetConfig) -> None:
        """test a resumed run continues from its saved step"""

        first = run_training(tiny_config, regimes=["federated"])
        again = run_training(tiny_config, regimes=["federated"], resume=True)
        assert np.array_equal(first["federated"].get("f").weights, again["federated"].get("f").weights)

        longer = run_training(tiny_config, regimes=["federated"], resume=True, total_steps=16)
        assert longer["federated"].get("f").step >= 16
        _, rows = read_records(RunPaths.from_config(tiny_config).curve("federated"))
        steps = [row["step"] for row in rows if row["event"] is None]
        assert steps == sorted(steps)
        assert len(steps) == len(set(steps))

    @staticmethod
    def test_resume_other_config(tiny_config: MapnetConfig) -> None:
        """test a resume state of another configuration is refused"""

        run_training(tiny_config, regimes=["curriculum"])
        changed = tiny_config.override("placement.learning_rate", "0.001")
        with pytest.raises(CheckpointError):
            run_training(changed, regimes=["curriculum"], resume=True)


class TestEvaluation:
    """Test run_generalization_eval, run_dynamic_comparison and run_trace"""

    @staticmethod
    def test_generalization_eval(trained_config: MapnetConfig) -> None:
        """test every regime runs on the same seeded episodes"""

        rows = run_generalization_eval(trained_config, progress=False)
        slots = trained_config.scenario.slot_count
        assert len(rows) == 3 * trained_config.experiment.episode_count * slots

        complexity = {row["arm"]: row["complexity"] for row in rows}
        assert complexity == {"codebook": 3, "curriculum": 2, "federated": 1}

        seeds = {(row["arm"], row["episode"]): row["seed"] for row in rows}
        for episode in range(trained_config.experiment.episode_count):
            assert len({seeds[(arm, episode)] for arm in complexity}) == 1

        header, written = read_records(RunPaths.from_config(trained_config).records("eval"))
        assert header["kind"] == "eval"
        assert written == rows

    @staticmethod
    def test_dynamic_comparison(trained_config: MapnetConfig) -> None:
        """test the three arms and the written report"""

        report = run_dynamic_comparison(trained_config, progress=False)
        assert report["baseline"] == "baseline"
        assert report["seeds"] == trained_config.experiment.compare_seeds
        assert sorted(report["arms"]) == ["baseline", "codebook-tradeoff", "federated-tradeoff"]
        assert RunPaths.from_config(trained_config).report("compare").exists()

    @staticmethod
    def test_trace(trained_config: MapnetConfig) -> None:
        """test one checked episode"""

        rows = run_trace(trained_config, regime="codebook", seed=5, dynamic=True)
        assert [row["t"] for row in rows] == list(range(trained_config.scenario.slot_count))
        assert all(row["seed"] == 5 for row in rows)
        header, _ = read_records(RunPaths.from_config(trained_config).records("trace"))
        assert header["seeds"] == [5]


class TestReports:
    """Test comparison_report and summarize"""

    @staticmethod
    def test_comparison_report() -> None:
        """test relative changes and paired wins"""

        report = comparison_report(synthetic_rows())
        arms = report["arms"]
        assert report["seeds"] == 2
        assert arms["baseline"]["sum_rate"] == pytest.approx(2.5e9)
        assert "wins" not in arms["baseline"]
        assert arms["codebook-tradeoff"]["delta_sum_rate"] == pytest.approx(0.0)
        assert arms["codebook-tradeoff"]["wins"] == pytest.approx(0.5)
        assert arms["federated-tradeoff"]["delta_sum_rate"] == pytest.approx(0.6)
        assert arms["federated-tradeoff"]["wins"] == pytest.approx(1.0)

        with pytest.raises(EmptyRecordError):
            comparison_report([row for row in synthetic_rows() if row["arm"] != "baseline"])

    @staticmethod
    def test_summarize() -> None:
        """test per arm and M_s averages"""

        summary = summarize(synthetic_rows())
        federated = summary[summary["arm"] == "federated-tradeoff"].iloc[0]
        assert federated["sum_rate"] == pytest.approx(4e9)
        assert federated["slots"] == 4
        assert "Gbps" in render_summary(summary)

    @staticmethod
    def test_summarize_errors() -> None:
        """test empty rows and inconsistent eta"""

        with pytest.raises(EmptyRecordError):
            summarize([])

        rows = synthetic_rows()
        rows[0]["eta"] *= 2
        with pytest.raises(RecordFormatError):
            summarize(rows)

    @staticmethod
    def test_run_paths(tiny_config: MapnetConfig) -> None:
        """test the output layout"""

        paths = RunPaths.from_config(tiny_config)
        assert paths.root.name == "tiny"
        assert paths.records("eval").name == "eval.ndjson"
        assert paths.curves() == []
