"""simulator"""

from __future__ import annotations
from datetime import datetime
from multiprocessing import Queue, Process
from multiprocessing.context import BaseContext
from textwrap import dedent
from dataclasses import dataclass, field
from queue import Empty
from typing import Any
import asyncio
import multiprocessing
import os

import click

from mapnet.config import MapnetConfig
from mapnet.errors import WorkerExitedError
from mapnet.jobs import EpisodeJob, EpisodeResult
from mapnet.producer import EpisodeProducer
from mapnet.records import sort_rows
from mapnet.worker import EpisodeWorker


_RESET_CURSOR = "\033[F"
if os.name == "nt":
    _RESET_CURSOR = "\x1b[A"


@dataclass
class SimulationStatistics:
    """
    Holds statistics of a batch of episodes. The `new` method should be used to create new copy of the class.
    Attributes should not be changed manually, rather the values should be updated via the `update` method.

    Attributes
    ----------
    episodes_done : `int`
        Episodes finished without error
    episodes_failed : `int`
        Episodes that raised
    mean_sum_rate : `float`
        Mean R(t) over every slot finished so far, bps
    average_seconds_per_episode : `float`
    start : `datetime`
    total_episodes : `int`
    label : `str`
        Title of the progress monitor

    Methods
    -------
    new(total_episodes: int, label: str) -> SimulationStatistics
    update(result: EpisodeResult)
        Update the attributes based on the contents of an `EpisodeResult`
    render() -> str
        Provides a formatted string representing the current state of the run
    """

    episodes_done: int
    episodes_failed: int
    mean_sum_rate: float
    average_seconds_per_episode: float
    start: datetime
    total_episodes: int
    label: str
    slots: int = 0

    @property
    def episodes_processed(self) -> int:
        return self.episodes_done + self.episodes_failed

    @classmethod
    def new(cls, total_episodes: int, label: str = "MAP Network Simulator") -> SimulationStatistics:
        return cls(
            episodes_done=0,
            episodes_failed=0,
            mean_sum_rate=0.0,
            average_seconds_per_episode=0.0,
            start=datetime.now(),
            total_episodes=total_episodes,
            label=label,
        )

    def update(self, result: EpisodeResult) -> None:
        """
        Update the attributes based on the contents of an `EpisodeResult`. Failed episodes count towards the
        `average_seconds_per_episode` calculation but not towards the sum-rate.

        Parameters
        ----------
        result : `EpisodeResult`
        """

        if result.error is None:
            self.episodes_done += 1
        else:
            self.episodes_failed += 1

        if result.rows:
            total = self.mean_sum_rate * self.slots + sum(row["sum_rate"] for row in result.rows)
            self.slots += len(result.rows)
            self.mean_sum_rate = total / self.slots

        self.average_seconds_per_episode *= (self.episodes_processed - 1) / self.episodes_processed
        self.average_seconds_per_episode += result.service_time_seconds / self.episodes_processed

    def render(self) -> str:
        """
        Provides a formatted string representing the current state of the run

        Returns
        -------
        `str`
        """

        bar_width = 28
        total = max(self.total_episodes, 1)
        space = " " * int(bar_width * ((self.total_episodes - self.episodes_processed) / total))
        done = "=" * int((self.episodes_done / total) * bar_width)
        failed = "-" * (bar_width - len(done) - len(space))

        avg = str(self.average_seconds_per_episode)[:12]
        rate = f"{self.mean_sum_rate / 1e6:.3f}"
        return dedent(
            f"""
            {click.style(self.label, bold=True)} [{datetime.now() - self.start}]

            Episodes        {self.episodes_processed}/{self.total_episodes}
            Mean R (Mbps)   {rate}
            Avg sec/episode {avg}
            |{click.style(done, fg='green')}{click.style(failed, fg='red')}{space}|
            """
        )


@dataclass
class Engine:
    """
    Manages the producer and worker processes

    Attributes
    ----------
    producer : `Process`
        A process targeting `EpisodeProducer.fill_queue`
    workers : `list[Process]`
        A list of processes targeting `EpisodeWorker.service_queue`

    Methods
    -------
    new(producer: EpisodeProducer, workers: list[EpisodeWorker], context: BaseContext) -> Engine:
        Factory method to build a new instance from the producer and workers.
    start()
        Calls the `start` method on all processes
    kill()
        Calls the `kill` method on all processes
    alive() -> bool
        Whether every worker process is still running
    """

    producer: Process
    workers: list[Process]

    @classmethod
    def new(cls, producer: EpisodeProducer, workers: list[EpisodeWorker], context: BaseContext) -> Engine:
        return cls(
            producer=context.Process(target=producer.fill_queue, name="producer", daemon=True),  # type: ignore
            workers=[
                context.Process(target=w.service_queue, name=f"worker_{i}", daemon=True)  # type: ignore
                for i, w in enumerate(workers)
            ],
        )

    def start(self) -> None:
        """Calls the `start` method on all processes"""

        for worker in self.workers:
            worker.start()

        self.producer.start()

    def kill(self) -> None:
        """Calls the `kill` method on all processes"""

        for worker in self.workers:
            worker.kill()

        self.producer.kill()

    def alive(self) -> bool:
        return all(worker.is_alive() for worker in self.workers)


@dataclass
class Simulator:
    """
    Runs a batch of evaluation episodes. New instances should be created via the `from_config` factory method.
    With `experiment.workers = 0` the episodes run one after another in the calling process, otherwise they fan out
    over worker processes. Either way `rows` returns the slot rows ordered by (arm, episode, t).

    Attributes
    ----------
    producer : `EpisodeProducer`
    workers : `list[EpisodeWorker]`
    result_queue : `Queue[EpisodeResult]`
    stats : `SimulationStatistics`
    running : `bool`
        Flag to signal that the run is in progress
    refresh : `float`
        Refresh rate of the progress monitor
    engine : `Engine | None`
        The engine managing the processes, `None` runs inline
    progress : `bool`
        Draw the progress monitor
    results : `list[EpisodeResult]`

    Methods
    -------
    from_config(config: MapnetConfig, jobs: list[EpisodeJob], label: str) -> Simulator
    run()
        Async method that runs every job
    rows() -> list[dict]
    """

    producer: EpisodeProducer
    workers: list[EpisodeWorker]
    result_queue: Queue[EpisodeResult]
    stats: SimulationStatistics
    running: bool
    refresh: float
    engine: Engine | None
    progress: bool = True
    results: list[EpisodeResult] = field(default_factory=list)

    @classmethod
    def from_config(
        cls, config: MapnetConfig, jobs: list[EpisodeJob], label: str = "MAP Network Simulator", progress: bool = True
    ) -> Simulator:
        """
        Factory method to build a new instance from a `MapnetConfig` and the jobs to run.

        Parameters
        ----------
        config : `MapnetConfig`
        jobs : `list[EpisodeJob]`
        label : `str`
            Title of the progress monitor
        progress : `bool = True`

        Returns
        -------
        `Simulator`
        """

        n_workers = config.experiment.workers
        context = multiprocessing.get_context("spawn")
        max_q_size = 2 * max(n_workers, 1)
        job_queue: Queue[EpisodeJob] = context.Queue(maxsize=max_q_size)
        _result_queue: Queue[EpisodeResult] = context.Queue(maxsize=max_q_size)

        _workers = [EpisodeWorker(job_queue, _result_queue, config) for _ in range(max(n_workers, 1))]
        _producer = EpisodeProducer(jobs=jobs, queue=job_queue)
        _engine = Engine.new(_producer, _workers, context) if n_workers > 0 else None

        return cls(
            producer=_producer,
            workers=_workers,
            result_queue=_result_queue,
            stats=SimulationStatistics.new(total_episodes=len(jobs), label=label),
            running=False,
            refresh=config.experiment.refresh,
            engine=_engine,
            progress=progress,
        )

    async def _progress_monitor(self) -> None:
        """
        Async method to update the progress monitor. Meant to run as an asyncio.task. Ending the task should be
        signaled by setting `Simulator.running` attribute to `False`
        """
        clear = _RESET_CURSOR * 8 + (" " * 40 + "\n") * 8 + _RESET_CURSOR * 9
        click.echo(self.stats.render())
        while self.running:
            click.echo(clear)
            click.echo(self.stats.render())
            await asyncio.sleep(self.refresh)

        click.echo(clear)
        click.echo(self.stats.render())

    def _collect(self, result: EpisodeResult) -> None:
        self.results.append(result)
        self.stats.update(result)

    async def _run_inline(self) -> None:
        event_loop = asyncio.get_event_loop()
        worker = self.workers[0]
        for job in self.producer.jobs:
            result = await event_loop.run_in_executor(None, worker.run_episode, job)
            self._collect(result)

    async def _run_engine(self, engine: Engine) -> None:
        event_loop = asyncio.get_event_loop()
        engine.start()
        try:
            while self.stats.episodes_processed < self.producer.total:
                try:
                    result = await event_loop.run_in_executor(None, self.result_queue.get, True, 0.5)
                except Empty:
                    if not engine.alive():
                        raise WorkerExitedError("a worker process exited unexpectedly") from None
                    continue

                self._collect(result)
                if result.error is not None:
                    break
        finally:
            engine.kill()

    async def run(self) -> None:
        """
        Async method that runs every job. Re-raises the first error reported by an episode.
        """

        progress_monitor_task = asyncio.create_task(self._progress_monitor()) if self.progress else None
        self.running = True
        try:
            if self.engine is None:
                await self._run_inline()
            else:
                await self._run_engine(self.engine)
        finally:
            self.running = False
            if progress_monitor_task is not None:
                await progress_monitor_task

        for result in self.results:
            if result.error is not None:
                raise result.error

    def rows(self) -> list[dict[str, Any]]:
        return sort_rows([row for result in self.results for row in result.rows])


def run_jobs(
    config: MapnetConfig, jobs: list[EpisodeJob], label: str = "MAP Network Simulator", progress: bool = True
) -> list[dict[str, Any]]:
    """Run `jobs` to completion and return their slot rows in (arm, episode, t) order"""

    simulator = Simulator.from_config(config, jobs, label=label, progress=progress)
    asyncio.run(simulator.run())
    return simulator.rows()
