"""Test the producer module"""

import multiprocessing
from unittest.mock import patch

from mapnet.jobs import EpisodeJob
from mapnet.producer import EpisodeProducer


class MockQueue:
    items: list[EpisodeJob]

    def __init__(self) -> None:
        self.items = []

    def put(self, obj: EpisodeJob) -> None:
        self.items.append(obj)


class TestEpisodeProducer:
    """Test EpisodeProducer"""

    @staticmethod
    @patch.object(multiprocessing, "Queue", new=MockQueue)
    def test_fill_queue() -> None:
        """Test fill_queue"""

        _queue: multiprocessing.Queue[EpisodeJob] = multiprocessing.Queue()
        jobs = [
            EpisodeJob(arm="codebook", episode=k, seed=100 + k, registry_dir="runs/codebook", initial_maps=2)
            for k in range(10)
        ]
        producer = EpisodeProducer(jobs=jobs, queue=_queue)
        producer.fill_queue()

        assert producer.total == 10
        assert len(_queue.items) == 10  # type: ignore
        assert [job.episode for job in _queue.items] == list(range(10))  # type: ignore
