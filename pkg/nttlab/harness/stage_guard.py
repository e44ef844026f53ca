"""
Stage failure guard for the experiment matrix.

A matrix run is a graph of stages (simulate, pretrain, finetune, evaluate).
When a stage fails its key is marked FAILED with the cause; any later stage
that depends on it short-circuits to FAILED ("upstream failed") instead of
running, and unrelated stages carry on.

Usage:
    guard = StageGuard()
    trace = guard.run("simulate/PRETRAIN", lambda: simulate(...))
    params = guard.run("pretrain/FULL", lambda: pretrain(...), depends_on=["simulate/PRETRAIN"])
    if params.ok:
        ...
"""

import logging
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Iterable, Optional, Tuple, Type

logger = logging.getLogger(__name__)


class StageState(Enum):
    DONE = "done"
    FAILED = "failed"


@dataclass
class StageOutcome:
    key: str
    state: StageState
    value: Any = None
    cause: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.state is StageState.DONE


def describe_failure(exc: BaseException) -> str:
    """One-line cause: exception class plus message."""
    return f"{type(exc).__name__}: {exc}"


class StageGuard:
    """Runs stages, remembering which failed so dependents can skip."""

    def __init__(self, catch: Tuple[Type[BaseException], ...] = (Exception,)):
        self.catch = catch
        self._outcomes: Dict[str, StageOutcome] = {}
        self._lock = threading.RLock()

    def get(self, key: str) -> Optional[StageOutcome]:
        with self._lock:
            return self._outcomes.get(key)

    def upstream_failure(self, depends_on: Iterable[str]) -> Optional[StageOutcome]:
        """First dependency that failed or never ran."""
        with self._lock:
            for dep in depends_on:
                outcome = self._outcomes.get(dep)
                if outcome is None:
                    return StageOutcome(dep, StageState.FAILED, cause="never ran")
                if not outcome.ok:
                    return outcome
        return None

    def run(self, key: str, func: Callable[[], Any], depends_on: Iterable[str] = ()) -> StageOutcome:
        """Execute `func` unless a dependency failed; the outcome is recorded under `key`."""
        failed = self.upstream_failure(depends_on)
        if failed is not None:
            cause = failed.cause or ""
            if not cause.startswith("upstream failed"):
                cause = f"upstream failed: {failed.key}: {cause}"
            outcome = StageOutcome(key, StageState.FAILED, cause=cause)
            logger.debug(f"Stage {key} skipped ({outcome.cause})")
        else:
            try:
                outcome = StageOutcome(key, StageState.DONE, value=func())
            except self.catch as e:
                outcome = StageOutcome(key, StageState.FAILED, cause=describe_failure(e))
                logger.warning(f"Stage {key} FAILED: {outcome.cause}")
                logger.debug("stage failure traceback", exc_info=True)
        with self._lock:
            self._outcomes[key] = outcome
        return outcome

    def get_stats(self) -> Dict[str, int]:
        with self._lock:
            failed = sum(1 for o in self._outcomes.values() if not o.ok)
            return {"stages": len(self._outcomes), "done": len(self._outcomes) - failed, "failed": failed}

    def reset(self) -> None:
        with self._lock:
            self._outcomes.clear()
