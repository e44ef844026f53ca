"""
Ordered worker pool for independent jobs (simulation runs, matrix cells).

Jobs may finish in any order; results are always merged back in submission
order so downstream artifacts stay byte-deterministic.
"""

import logging
import threading
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence

logger = logging.getLogger(__name__)


class JobStatus(Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class PoolJob:
    """One submitted job and its outcome."""

    index: int
    payload: Any
    status: JobStatus = JobStatus.PENDING
    result: Any = None
    error: Optional[str] = None
    started_at: float = 0.0
    completed_at: float = 0.0

    @property
    def duration(self) -> float:
        end = self.completed_at or time.time()
        return max(0.0, end - self.started_at) if self.started_at else 0.0

    def to_dict(self) -> Dict:
        return {
            "index": self.index,
            "status": self.status.value,
            "error": self.error,
            "duration": self.duration,
        }


@dataclass
class RunPool:
    """
    Run a picklable function over payloads, sequentially or in processes.

    Usage:
        pool = RunPool(max_workers=4)
        results = pool.map_ordered(simulate_one, jobs)
    """

    max_workers: int = 1
    jobs: List[PoolJob] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.max_workers < 1:
            raise ValueError("max_workers must be >= 1")

    def map_ordered(
        self,
        fn: Callable[[Any], Any],
        payloads: Sequence[Any],
        progress_callback: Optional[Callable[[int, int], None]] = None,
    ) -> List[Any]:
        """Apply `fn` to every payload; results come back in payload order.

        The first job exception is re-raised after every job has settled.
        """
        with self._lock:
            self.jobs = [PoolJob(index=i, payload=p) for i, p in enumerate(payloads)]
        total = len(self.jobs)
        if total == 0:
            return []

        if self.max_workers == 1 or total == 1:
            for job in self.jobs:
                self._run_inline(fn, job)
                if progress_callback:
                    progress_callback(job.index + 1, total)
        else:
            workers = min(self.max_workers, total)
            logger.info(f"Running {total} jobs on {workers} worker processes")
            with ProcessPoolExecutor(max_workers=workers) as executor:
                futures = []
                for job in self.jobs:
                    job.status = JobStatus.RUNNING
                    job.started_at = time.time()
                    futures.append(executor.submit(fn, job.payload))
                # Collected in submission order, never completion order.
                for done, (job, future) in enumerate(zip(self.jobs, futures), start=1):
                    try:
                        job.result = future.result()
                        job.status = JobStatus.COMPLETED
                    except Exception as e:
                        job.status = JobStatus.FAILED
                        job.error = f"{type(e).__name__}: {e}"
                        job.result = e
                    job.completed_at = time.time()
                    if progress_callback:
                        progress_callback(done, total)

        failed = [job for job in self.jobs if job.status is JobStatus.FAILED]
        if failed:
            logger.error(f"{len(failed)}/{total} jobs failed; first: {failed[0].error}")
            raise failed[0].result
        return [job.result for job in self.jobs]

    def _run_inline(self, fn: Callable[[Any], Any], job: PoolJob) -> None:
        job.status = JobStatus.RUNNING
        job.started_at = time.time()
        try:
            job.result = fn(job.payload)
            job.status = JobStatus.COMPLETED
        except Exception as e:
            job.status = JobStatus.FAILED
            job.error = f"{type(e).__name__}: {e}"
            job.result = e
        job.completed_at = time.time()

    def get_stats(self) -> Dict[str, int]:
        with self._lock:
            return {
                status.value: sum(1 for j in self.jobs if j.status is status) for status in JobStatus
            }
