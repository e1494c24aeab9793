"""experiments"""

from __future__ import annotations
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any
import json
import logging
import pickle
import zlib

import numpy as np
import pandas as pd
import torch

from mapnet.config import MapnetConfig
from mapnet.errors import CheckpointError, EmptyRecordError, RecordFormatError
from mapnet.federation import (
    INDEX_FILE,
    FederationHook,
    PolicyRegistry,
    Regime,
    agent_keys,
    registry_from_training,
    sample_training_scenario,
)
from mapnet.jobs import EpisodeJob
from mapnet.ppo import TrainingScenario, TrainingState, train_ppo
from mapnet.records import read_records, record_header, records_frame, write_records
from mapnet.simulator import run_jobs
from mapnet.tradeoff import initial_map_count


logger = logging.getLogger(__name__)

COMPARISON_ARMS: dict[str, tuple[Regime, bool]] = {
    "baseline": (Regime.CODEBOOK, False),
    "codebook-tradeoff": (Regime.CODEBOOK, True),
    "federated-tradeoff": (Regime.FEDERATED, True),
}
BASELINE_ARM = "baseline"


@dataclass(frozen=True)
class RunPaths:
    """
    Output layout of a run below `experiment.output_dir / experiment.name`:

        policies/<regime>/      registry (checkpoint files and index.json)
        training/<label>.pt     resume state of a training run
        curves/<label>.ndjson   training curve
        diverged/<label>/       last finite weights of a diverged run
        records/<kind>.ndjson   slot records of eval, compare and trace
        reports/compare.json    comparison report
        plots/                  figures
    """

    root: Path

    @classmethod
    def from_config(cls, config: MapnetConfig) -> RunPaths:
        return cls(Path(config.experiment.output_dir) / config.experiment.name)

    def policies(self, regime: str) -> Path:
        return self.root / "policies" / regime

    def resume(self, label: str) -> Path:
        return self.root / "training" / f"{label}.pt"

    def curve(self, label: str) -> Path:
        return self.root / "curves" / f"{label}.ndjson"

    def diverged(self, label: str) -> Path:
        return self.root / "diverged" / label

    def records(self, kind: str) -> Path:
        return self.root / "records" / f"{kind}.ndjson"

    def report(self, kind: str) -> Path:
        return self.root / "reports" / f"{kind}.json"

    @property
    def plots(self) -> Path:
        return self.root / "plots"

    def curves(self) -> list[Path]:
        directory = self.root / "curves"
        return sorted(directory.glob("*.ndjson")) if directory.exists() else []


def run_seed(config: MapnetConfig, label: str) -> int:
    """Seed of a training run, stable across processes and python versions"""

    return int(np.random.SeedSequence([config.experiment.seed, zlib.crc32(label.encode())]).generate_state(1)[0])


def episode_seed(config: MapnetConfig, episode: int) -> int:
    """Scenario seed of an evaluation episode; every arm uses the same seed for the same episode index"""

    return int(np.random.SeedSequence([config.experiment.seed, episode]).generate_state(1)[0])


def _save_progress(run: TrainingState, hook: FederationHook | None, config: MapnetConfig, paths: RunPaths) -> None:
    state_path = paths.resume(run.regime)
    state_path.parent.mkdir(parents=True, exist_ok=True)
    table = {
        "config_hash": config.config_hash(),
        "run": run.state_dict(),
        "hook": hook.state_dict() if hook is not None else None,
    }
    partial = state_path.with_suffix(".tmp")
    torch.save(table, partial)
    partial.replace(state_path)
    write_records(paths.curve(run.regime), record_header(config, "curve", label=run.regime), run.curve, order=None)


def _restore(run: TrainingState, hook: FederationHook | None, config: MapnetConfig, paths: RunPaths) -> None:
    """
    Load the resume state of `run` and its curve, dropping curve rows written after the saved step.

    Raises
    ------
    `CheckpointError`
        Unreadable state, or a state written by a different configuration
    """

    state_path = paths.resume(run.regime)
    try:
        table = torch.load(state_path, weights_only=False)
    except (OSError, RuntimeError, EOFError, ValueError, pickle.UnpicklingError) as e:
        raise CheckpointError(f"cannot resume from {state_path}: {e}") from e

    if not isinstance(table, dict) or table.get("config_hash") != config.config_hash():
        raise CheckpointError(f"{state_path} was written with a different configuration, train again without --resume")

    try:
        run.load_state_dict(table["run"])
        if hook is not None:
            hook.load_state_dict(table["hook"])
    except (KeyError, TypeError, RuntimeError) as e:
        raise CheckpointError(f"resume state {state_path} is incomplete: {e}") from e

    rows: list[dict[str, Any]] = []
    if paths.curve(run.regime).exists():
        _, rows = read_records(paths.curve(run.regime))
    run.curve = [row for row in rows if row["step"] <= run.step]
    logger.info("resuming %s at step %d, episode %d", run.regime, run.step, run.episode)


def _train(
    run: TrainingState,
    regime: Regime,
    config: MapnetConfig,
    paths: RunPaths,
    resume: bool,
    total_steps: int | None,
    hook: FederationHook | None = None,
    size: int | None = None,
) -> TrainingState:
    if resume and paths.resume(run.regime).exists():
        _restore(run, hook, config, paths)

    def sampler(rng: np.random.Generator) -> TrainingScenario:
        return sample_training_scenario(regime, rng, config, size)

    def on_batch(state: TrainingState) -> None:
        _save_progress(state, hook, config, paths)

    def on_diverge(state: TrainingState) -> None:
        _save_progress(state, hook, config, paths)
        PolicyRegistry(regime, state.parameters(), config.config_hash()).save(paths.diverged(state.regime))

    return train_ppo(run, sampler, config, hook=hook, total_steps=total_steps, on_batch=on_batch, on_diverge=on_diverge)


def run_training(
    config: MapnetConfig, regimes: list[str] | None = None, resume: bool = False, total_steps: int | None = None
) -> dict[str, PolicyRegistry]:
    """
    Train every regime and save its registry. The codebook trains one team per size in
    `federation.codebook_sizes`, the curriculum one model per MAP slot and the federated regime its local models
    plus pi_f. Progress is checkpointed after every batch and `resume` continues from there.

    Parameters
    ----------
    config : `MapnetConfig`
    regimes : `list[str] | None`
        Regimes to train, `experiment.regimes` by default
    resume : `bool = False`
    total_steps : `int | None`
        Agent step budget per run, `placement.total_steps` by default

    Returns
    -------
    `dict[str, PolicyRegistry]`

    Raises
    ------
    `CheckpointError`
        A resume state cannot be used
    `TrainingDivergedError`
        A run produced a non finite loss; its last finite weights are saved under `diverged/`
    """

    paths = RunPaths.from_config(config)
    registries: dict[str, PolicyRegistry] = {}
    for name in regimes or list(config.experiment.regimes):
        regime = Regime(name)
        runs: list[TrainingState] = []
        hook = None
        if regime is Regime.CODEBOOK:
            for size in config.federation.codebook_sizes:
                label = f"codebook-{size}"
                run = TrainingState.new(label, agent_keys(regime, config, size), config, run_seed(config, label))
                runs.append(_train(run, regime, config, paths, resume, total_steps, size=size))
        else:
            run = TrainingState.new(regime.value, agent_keys(regime, config), config, run_seed(config, regime.value))
            hook = FederationHook.new(run, config) if regime is Regime.FEDERATED else None
            runs.append(_train(run, regime, config, paths, resume, total_steps, hook=hook))

        registry = registry_from_training(regime, runs, hook, config.config_hash())
        registry.save(paths.policies(regime.value))
        registries[regime.value] = registry

    return registries


def initial_maps_for(config: MapnetConfig, episode: int) -> int:
    """M_s(0) of an evaluation episode: cycles through `experiment.initial_maps`, K / K_i when it is empty"""

    if config.experiment.initial_maps:
        return config.experiment.initial_maps[episode % len(config.experiment.initial_maps)]
    return initial_map_count(config.experiment.n_ue, config.scenario.map_beam_limit, config.scenario.max_maps)


def registry_dir(config: MapnetConfig, regime: Regime | str) -> Path:
    directory = RunPaths.from_config(config).policies(Regime(regime).value)
    if not (directory / INDEX_FILE).exists():
        raise CheckpointError(f"no trained {Regime(regime).value} policies in {directory}, run `mapnet train` first")
    return directory


def evaluation_jobs(
    config: MapnetConfig, arm: str, regime: Regime | str, episodes: int, dynamic: bool, check: bool | None = None
) -> list[EpisodeJob]:
    directory = str(registry_dir(config, regime))
    check = config.experiment.check_constraints if check is None else check
    return [
        EpisodeJob(
            arm=arm,
            episode=episode,
            seed=episode_seed(config, episode),
            registry_dir=directory,
            initial_maps=initial_maps_for(config, episode),
            dynamic=dynamic,
            n_ue=config.experiment.n_ue,
            check=check,
        )
        for episode in range(episodes)
    ]


def run_generalization_eval(config: MapnetConfig, progress: bool = True) -> list[dict[str, Any]]:
    """
    Evaluate every trained regime on the same seeded mobile scenarios (`experiment.n_ue` UEs, M_s(0) from
    `initial_maps_for`), with the trade-off controller when `experiment.dynamic_map_management` is set. Rows are
    written to `records/eval.ndjson`.

    Returns
    -------
    `list[dict[str, Any]]`
        Slot rows ordered by (arm, episode, t)
    """

    episodes = config.experiment.episode_count
    jobs: list[EpisodeJob] = []
    for regime in config.experiment.regimes:
        jobs += evaluation_jobs(config, regime, regime, episodes, config.experiment.dynamic_map_management)

    rows = run_jobs(config, jobs, label="Generalization evaluation", progress=progress)
    header = record_header(config, "eval", seeds=[episode_seed(config, e) for e in range(episodes)])
    write_records(RunPaths.from_config(config).records("eval"), header, rows)
    return rows


def comparison_report(rows: list[dict[str, Any]], baseline: str = BASELINE_ARM) -> dict[str, Any]:
    """
    Mean R and eta of every arm, their change relative to `baseline` and the share of paired seeds on which the arm's
    mean R beats the baseline.
    """

    frame = records_frame(rows)
    if baseline not in set(frame["arm"]):
        raise EmptyRecordError(f"no rows of the {baseline} arm")

    per_seed = frame.groupby(["arm", "episode"])["sum_rate"].mean()
    base = per_seed.loc[baseline]
    arms: dict[str, dict[str, Any]] = {}
    for arm, group in frame.groupby("arm"):
        arms[str(arm)] = {
            "sum_rate": float(group["sum_rate"].mean()),
            "eta": float(group["eta"].mean()),
            "connected": float(group["connected"].mean()),
            "deployed": float(group["deployed"].mean()),
        }

    for arm, entry in arms.items():
        if arm == baseline:
            continue
        for metric in ("sum_rate", "eta"):
            reference = arms[baseline][metric]
            entry[f"delta_{metric}"] = (entry[metric] - reference) / reference if reference > 0 else None
        wins = per_seed.loc[arm].reindex(base.index) > base
        entry["wins"] = float(wins.mean())

    return {"baseline": baseline, "seeds": int(base.size), "arms": arms}


def run_dynamic_comparison(config: MapnetConfig, progress: bool = True) -> dict[str, Any]:
    """
    Paired comparison on `experiment.compare_seeds` seeds: the codebook with a fixed team, the codebook with the
    trade-off controller and the federated policy with the trade-off controller. All arms see identical UE traces.
    Rows go to `records/compare.ndjson` and the report to `reports/compare.json`.

    Returns
    -------
    `dict[str, Any]`
        See `comparison_report`
    """

    episodes = config.experiment.compare_seeds
    jobs: list[EpisodeJob] = []
    for arm, (regime, dynamic) in COMPARISON_ARMS.items():
        jobs += evaluation_jobs(config, arm, regime, episodes, dynamic)

    rows = run_jobs(config, jobs, label="Dynamic comparison", progress=progress)
    paths = RunPaths.from_config(config)
    header = record_header(config, "compare", seeds=[episode_seed(config, e) for e in range(episodes)])
    write_records(paths.records("compare"), header, rows)

    report = comparison_report(rows)
    paths.report("compare").parent.mkdir(parents=True, exist_ok=True)
    paths.report("compare").write_text(json.dumps(report, indent=2, sort_keys=True))
    return report


def run_trace(
    config: MapnetConfig, regime: Regime | str = Regime.FEDERATED, seed: int | None = None, dynamic: bool | None = None
) -> list[dict[str, Any]]:
    """
    Run one episode inline with the constraints asserted on every slot. Decisions are logged at DEBUG and kept in
    the rows written to `records/trace.ndjson`.

    Raises
    ------
    `ConstraintViolationError`
        A slot violated one of the network constraints
    """

    config = replace(config, experiment=replace(config.experiment, workers=0))
    dynamic = config.experiment.dynamic_map_management if dynamic is None else dynamic
    arm = Regime(regime).value
    job = EpisodeJob(
        arm=arm,
        episode=0,
        seed=episode_seed(config, 0) if seed is None else seed,
        registry_dir=str(registry_dir(config, regime)),
        initial_maps=initial_maps_for(config, 0),
        dynamic=dynamic,
        n_ue=config.experiment.n_ue,
        check=True,
    )
    rows = run_jobs(config, [job], label="Trace", progress=False)
    write_records(RunPaths.from_config(config).records("trace"), record_header(config, "trace", seeds=[job.seed]), rows)
    return rows


def summarize(rows: list[dict[str, Any]], by: tuple[str, ...] = ("arm", "deployed")) -> pd.DataFrame:
    """
    Per slot averages of R, eta and the connected UEs grouped by `by`.

    Raises
    ------
    `EmptyRecordError`
        No rows
    `RecordFormatError`
        A row's eta differs from R / O_c
    """

    frame = records_frame(rows)
    if not np.allclose(frame["eta"], frame["sum_rate"] / frame["complexity"], rtol=1e-12, atol=0.0):
        raise RecordFormatError("eta does not match R / O_c")

    summary = frame.groupby(list(by)).agg(
        sum_rate=("sum_rate", "mean"),
        eta=("eta", "mean"),
        connected=("connected", "mean"),
        slots=("t", "size"),
    )
    return summary.reset_index()


def render_summary(summary: pd.DataFrame) -> str:
    table = summary.copy()
    table["sum_rate"] = table["sum_rate"] / 1e9
    table["eta"] = table["eta"] / 1e9
    table = table.rename(columns={"sum_rate": "E[R] Gbps", "eta": "E[eta] Gbps/policy"})
    return table.to_string(index=False, float_format=lambda v: f"{v:.4f}")


def load_curves(config: MapnetConfig) -> dict[str, list[dict[str, Any]]]:
    """Training curves of the run by label"""

    curves = {}
    for path in RunPaths.from_config(config).curves():
        _, rows = read_records(path)
        curves[path.stem] = rows
    return curves

