"""
Unit tests for the ordered worker pool.
"""

import time

import pytest

from nttlab.core.run_pool import JobStatus, RunPool


def _square(x):
    return x * x


def _slow_first(x):
    # later payloads finish first
    time.sleep(0.05 * (3 - x))
    return x


def _fail_on_two(x):
    if x == 2:
        raise ValueError("bad payload 2")
    return x


class TestRunPool:
    def test_inline_results_in_order(self):
        pool = RunPool(max_workers=1)
        assert pool.map_ordered(_square, [3, 1, 2]) == [9, 1, 4]
        assert pool.get_stats()["completed"] == 3

    def test_empty_payloads(self):
        assert RunPool().map_ordered(_square, []) == []

    def test_process_results_keep_submission_order(self):
        """Results come back in payload order even when jobs finish out of order."""
        pool = RunPool(max_workers=3)
        assert pool.map_ordered(_slow_first, [0, 1, 2]) == [0, 1, 2]

    def test_first_failure_is_raised_after_all_jobs(self):
        pool = RunPool(max_workers=1)
        with pytest.raises(ValueError, match="bad payload 2"):
            pool.map_ordered(_fail_on_two, [1, 2, 3])
        assert [job.status for job in pool.jobs] == [
            JobStatus.COMPLETED,
            JobStatus.FAILED,
            JobStatus.COMPLETED,
        ]
        assert pool.jobs[1].to_dict()["error"] == "ValueError: bad payload 2"

    def test_progress_callback(self):
        seen = []
        RunPool().map_ordered(_square, [1, 2], progress_callback=lambda *args: seen.append(args))
        assert seen == [(1, 2), (2, 2)]

    def test_invalid_worker_count(self):
        with pytest.raises(ValueError):
            RunPool(max_workers=0)
