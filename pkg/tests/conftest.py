import atexit
import faulthandler
import os
import sys
import threading

import pytest

# Whole-session budgets in seconds; the slow matrix tests get more room.
WATCHDOG_SECONDS = 20 * 60
WATCHDOG_SECONDS_WITH_SLOW = 60 * 60


def _watchdog_seconds(config) -> int:  # noqa: ANN001
    value = os.environ.get("NTTLAB_TEST_WATCHDOG_SECONDS")
    if value is not None:
        try:
            return int(value)
        except ValueError:
            pass
    markexpr = config.getoption("markexpr", default="") or ""
    return WATCHDOG_SECONDS if "not slow" in markexpr else WATCHDOG_SECONDS_WITH_SLOW


def _arm_watchdog(seconds: int) -> None:
    def _expire() -> None:
        sys.stderr.write(f"\ntest session exceeded {seconds}s, dumping stacks and exiting\n")
        faulthandler.dump_traceback(file=sys.stderr, all_threads=True)
        os._exit(2)

    timer = threading.Timer(seconds, _expire)
    timer.daemon = True
    timer.start()
    atexit.register(timer.cancel)


def pytest_sessionstart(session) -> None:  # noqa: ANN001
    faulthandler.enable(all_threads=True)
    seconds = _watchdog_seconds(session.config)
    if seconds > 0:
        _arm_watchdog(seconds)


@pytest.fixture(autouse=True)
def isolated_logs(tmp_path, monkeypatch):
    """Keep log files and config lookups inside the test's tmp dir."""
    monkeypatch.setenv("NTTLAB_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.delenv("NTTLAB_CONFIG", raising=False)
    monkeypatch.chdir(tmp_path)
    from nttlab.utils.config import reset_config_cache

    reset_config_cache()
    yield
    reset_config_cache()
