"""worker"""

from __future__ import annotations
from dataclasses import replace
from multiprocessing import Queue
from time import perf_counter
import logging

import torch

from mapnet.config import MapnetConfig
from mapnet.environment import NetworkSimulation
from mapnet.errors import EpisodeFailedError, MapnetError
from mapnet.federation import PolicyRegistry, registry_selector
from mapnet.jobs import EpisodeJob, EpisodeResult
from mapnet.tradeoff import TradeoffController


logger = logging.getLogger(__name__)


class EpisodeWorker:
    """
    A class used to run evaluation episodes

    Attributes
    ----------
    jobs : `Queue[EpisodeJob]`
    results : `Queue[EpisodeResult]`
    config : `MapnetConfig`
    registries : `dict[str, PolicyRegistry]`
        Registries already loaded by this worker, by directory

    Methods
    -------
    run_episode(job: EpisodeJob) -> EpisodeResult
        Run one episode and collect its slot rows
    service_queue()
        Service the job queue
    """

    jobs: Queue[EpisodeJob]
    results: Queue[EpisodeResult]
    config: MapnetConfig
    registries: dict[str, PolicyRegistry]

    def __init__(self, jobs: Queue[EpisodeJob], results: Queue[EpisodeResult], config: MapnetConfig) -> None:
        self.jobs = jobs
        self.results = results
        self.config = config
        self.registries = {}

    def registry(self, directory: str) -> PolicyRegistry:
        if directory not in self.registries:
            self.registries[directory] = PolicyRegistry.load(directory)
        return self.registries[directory]

    def run_episode(self, job: EpisodeJob) -> EpisodeResult:
        """
        Run one evaluation episode. Every slot becomes a row holding M_s, the connected UEs, R(t), eta(t) = R / O_c
        of the registry, the mean placement reward, the trade-off counters and the decisions fired.

        Parameters
        ----------
        job : `EpisodeJob`

        Returns
        -------
        `EpisodeResult`
        """

        start = perf_counter()
        registry = self.registry(job.registry_dir)
        complexity = registry.complexity
        scenario = replace(self.config.scenario, n_ue=job.n_ue, seed=job.seed)
        controller = TradeoffController(self.config.tradeoff) if job.dynamic else None
        sim = NetworkSimulation.new(
            self.config,
            scenario,
            job.initial_maps,
            registry_selector(registry),
            controller=controller,
            rewards=self.config.experiment.eval_rewards,
            mode=self.config.experiment.action_mode,
            check=job.check,
        )

        rows = []
        for result in sim.run():
            rows.append(
                {
                    "arm": job.arm,
                    "episode": job.episode,
                    "seed": job.seed,
                    "t": result.t,
                    "deployed": result.deployed,
                    "connected": result.connected,
                    "sum_rate": float(result.sum_rate),
                    "eta": float(result.sum_rate) / complexity,
                    "complexity": complexity,
                    "reward": result.mean_reward,
                    "thetas": result.thetas,
                    "decisions": result.decisions,
                }
            )
            for decision in result.decisions:
                logger.debug("%s episode %d slot %d: %s", job.arm, job.episode, result.t, decision)

        return EpisodeResult(job.arm, job.episode, rows, perf_counter() - start)

    def service_queue(self) -> None:
        """
        Run jobs from the producer queue and relay the results back via the result queue. Errors are sent back inside
        the result; unexpected exceptions are logged with their traceback and wrapped in an `EpisodeFailedError`.
        Method will block at both queues if they are full or empty.
        """

        torch.set_num_threads(1)
        while True:
            job = self.jobs.get()
            start = perf_counter()
            try:
                result = self.run_episode(job)
            except MapnetError as e:
                result = EpisodeResult(job.arm, job.episode, [], perf_counter() - start, error=e)
            except Exception as e:  # pylint: disable=broad-except
                logger.exception("%s episode %d failed", job.arm, job.episode)
                error = EpisodeFailedError(f"{job.arm} episode {job.episode} failed: {type(e).__name__}: {e}")
                result = EpisodeResult(job.arm, job.episode, [], perf_counter() - start, error=error)
            self.results.put(result)
