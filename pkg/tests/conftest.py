import os
import sys
import time
from pathlib import Path

import pytest

from extchan.channels import ChannelRegistry

DATA = Path(__file__).parent / "data"
PY = sys.executable


def alive(pid: int) -> bool:
    """True if *pid* exists and is not a zombie (reparented children may never be reaped)."""
    try:
        with open(f"/proc/{pid}/stat") as f:
            stat = f.read()
    except FileNotFoundError:
        return False
    return stat.rsplit(")", 1)[1].split()[0] not in ("Z", "X")


def wait_dead(pid: int, timeout: float = 2.0) -> bool:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if not alive(pid):
            return True
        time.sleep(0.01)
    return not alive(pid)


def reap(pid: int):
    try:
        os.kill(pid, 9)
    except ProcessLookupError:
        pass


@pytest.fixture
def registry():
    reg = ChannelRegistry(read_timeout=10.0, shutdown_at_exit=False)
    yield reg
    reg.shutdown_all()


def py_cmd(script: str, *args) -> str:
    return " ".join([PY, str(DATA / script), *map(str, args)])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
