"""producer"""

from __future__ import annotations
from multiprocessing import Queue

from mapnet.jobs import EpisodeJob


class EpisodeProducer:
    """
    A class used to fill a queue with episode jobs

    Attributes
    ----------
    jobs : `list[EpisodeJob]`
        Every episode of the run, in submission order
    queue : `Queue[EpisodeJob]`
        A multiprocessing queue

    Methods
    -------
    fill_queue()
        Fill the queue with jobs, will block until all jobs are sent
    """

    jobs: list[EpisodeJob]
    queue: Queue[EpisodeJob]

    def __init__(self, jobs: list[EpisodeJob], queue: Queue[EpisodeJob]) -> None:
        self.jobs = jobs
        self.queue = queue

    @property
    def total(self) -> int:
        return len(self.jobs)

    def fill_queue(self) -> None:
        """
        Fill the queue with jobs. Blocks until all jobs are sent and waits until there is space in the queue.
        """

        for job in self.jobs:
            self.queue.put(job)
