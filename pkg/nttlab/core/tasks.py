"""Prediction tasks shared by windows, predictors and reports."""

from enum import Enum


class Task(Enum):
    """What a window asks for: the newest packet's delay or a message's completion time."""

    DELAY = "DELAY"
    MCT = "MCT"


class EvalTask(Enum):
    """Metric a report row scores; MCTs are scored in natural-log space."""

    DELAY = "DELAY"
    LOG_MCT = "LOG_MCT"

    @classmethod
    def for_task(cls, task: Task) -> "EvalTask":
        return cls.DELAY if task is Task.DELAY else cls.LOG_MCT
