"""Run solver processes with hard wall-clock limits, alone or as a portfolio."""

from __future__ import annotations

import atexit
import enum
import logging
import os
import signal
import subprocess
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .config import SolverConfig, SpawnFailure

log = logging.getLogger(__name__)

RAW_LIMIT = 4096
GRACE = 2.0  # seconds allowed past a timeout for kill + reap
_POLL = 0.01


class Outcome(str, enum.Enum):
    UNSAT = "Unsat"
    SAT = "Sat"
    UNKNOWN = "Unknown"
    TIMEOUT = "Timeout"
    ERROR = "SolverError"

    def __str__(self) -> str:
        return self.value


# best inconclusive verdict wins when nobody answers sat/unsat
_RANK = {Outcome.UNKNOWN: 0, Outcome.TIMEOUT: 1, Outcome.ERROR: 2}


@dataclass(frozen=True)
class SolverVerdict:
    outcome: Outcome
    elapsed: float
    raw_output: str
    config_name: str

    @property
    def conclusive(self) -> bool:
        return self.outcome in (Outcome.UNSAT, Outcome.SAT)

    @property
    def unsat(self) -> bool:
        return self.outcome is Outcome.UNSAT


class InconsistentVerdicts(RuntimeError):
    """Two portfolio members answered sat and unsat on the same script."""


class _Slots:
    """Process-count cap shared by every solver call in the interpreter."""

    def __init__(self, n: int):
        self._cond = threading.Condition()
        self.limit = n
        self.in_use = 0

    def set_limit(self, n: int) -> None:
        with self._cond:
            self.limit = max(1, n)
            self._cond.notify_all()

    def acquire(self, stop) -> bool:
        with self._cond:
            while self.in_use >= self.limit:
                if stop is not None and stop.is_set():
                    return False
                self._cond.wait(0.05)
            self.in_use += 1
            return True

    def release(self) -> None:
        with self._cond:
            self.in_use -= 1
            self._cond.notify_all()


SLOTS = _Slots(max(os.cpu_count() or 1, 4))


def set_process_limit(n: int) -> None:
    SLOTS.set_limit(n)


class AnyEvent:
    """Read-only view that is set when any of the wrapped events is set."""

    def __init__(self, *events):
        self.events = [e for e in events if e is not None]

    def is_set(self) -> bool:
        return any(e.is_set() for e in self.events)


def parse_verdict(stdout: str, returncode: int | None,
                  verdicts=None) -> Outcome:
    """Map raw solver output to an outcome; only exact status lines count."""
    from .config import SMTLIB_VERDICTS

    table = dict(verdicts or SMTLIB_VERDICTS)
    for line in stdout.splitlines():
        hit = table.get(line.strip())
        if hit is not None:
            return Outcome(hit)
    return Outcome.ERROR


_LIVE: set[int] = set()  # process groups still running, killed at interpreter exit
_LIVE_LOCK = threading.Lock()


@atexit.register
def _reap_all() -> None:
    with _LIVE_LOCK:
        groups = list(_LIVE)
    for pgid in groups:
        try:
            os.killpg(pgid, signal.SIGKILL)
        except (ProcessLookupError, PermissionError):
            pass


def _kill(proc: subprocess.Popen) -> None:
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass
    proc.wait()


def _truncate(text: str) -> str:
    return text if len(text) <= RAW_LIMIT else text[:RAW_LIMIT] + "\n...[truncated]"


def run_solver(script: str, config: SolverConfig, timeout: float, cancel=None) -> SolverVerdict:
    """Run one configuration on ``script``; never raises on solver failure.

    ``cancel`` is any object with ``is_set()``; a cancelled run is killed and
    reported as Timeout.  Raises :class:`SpawnFailure` if the executable is
    missing.
    """
    if timeout <= 0:
        raise ValueError("timeout must be positive")
    cmd = config.command()
    if not SLOTS.acquire(cancel):
        return SolverVerdict(Outcome.TIMEOUT, 0.0, "cancelled before start", config.name)
    try:
        with tempfile.TemporaryDirectory(prefix="indlemma-") as tmp:
            path = os.path.join(tmp, "input.smt2")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(script)
            out_path = os.path.join(tmp, "out")
            with open(out_path, "w+b") as out:
                argv = cmd + (["-"] if config.stdin else [path])
                src = open(path, "rb") if config.stdin else subprocess.DEVNULL
                start = time.monotonic()
                try:
                    proc = subprocess.Popen(
                        argv,
                        stdin=src,
                        stdout=out,
                        stderr=subprocess.STDOUT,
                        start_new_session=True,
                    )
                except OSError as e:
                    if config.stdin:
                        src.close()
                    raise SpawnFailure(f"{config.name}: {e}") from e
                with _LIVE_LOCK:
                    _LIVE.add(proc.pid)
                stopped = False
                while True:
                    remaining = timeout - (time.monotonic() - start)
                    try:
                        proc.wait(timeout=max(0.0, min(_POLL, remaining)))
                        break
                    except subprocess.TimeoutExpired:
                        pass
                    if remaining <= 0 or (cancel is not None and cancel.is_set()):
                        stopped = True
                        break
                if stopped:
                    _kill(proc)
                else:
                    # solvers that fork helpers (vampire portfolio) leave a group behind
                    try:
                        os.killpg(proc.pid, signal.SIGKILL)
                    except (ProcessLookupError, PermissionError):
                        pass
                with _LIVE_LOCK:
                    _LIVE.discard(proc.pid)
                elapsed = time.monotonic() - start
                if config.stdin:
                    src.close()
                out.seek(0)
                raw = out.read().decode("utf-8", errors="replace")
    finally:
        SLOTS.release()
    if stopped:
        return SolverVerdict(Outcome.TIMEOUT, elapsed, _truncate(raw), config.name)
    outcome = parse_verdict(raw, proc.returncode, config.verdicts)
    return SolverVerdict(outcome, elapsed, _truncate(raw), config.name)


def run_portfolio(script: str, configs, timeout: float, cancel=None) -> SolverVerdict:
    """Race ``configs``; the first sat/unsat answer wins and the rest are killed."""
    configs = list(configs)
    if not configs:
        raise ValueError("empty portfolio")
    if len(configs) == 1:
        return run_solver(script, configs[0], timeout, cancel)
    stop = threading.Event()
    either = AnyEvent(stop, cancel)
    results: list[SolverVerdict] = []
    failures: list[SpawnFailure] = []
    winner: list[SolverVerdict] = []
    lock = threading.Lock()
    start = time.monotonic()

    def work(cfg):
        try:
            v = run_solver(script, cfg, timeout, either)
        except SpawnFailure as e:
            with lock:
                failures.append(e)
            return
        with lock:
            results.append(v)
            if v.conclusive and not winner:
                winner.append(v)
                stop.set()

    with ThreadPoolExecutor(max_workers=len(configs), thread_name_prefix="portfolio") as ex:
        list(ex.map(work, configs))

    if len(failures) == len(configs):
        raise SpawnFailure("; ".join(str(f) for f in failures))
    conclusive = {v.outcome for v in results if v.conclusive}
    if len(conclusive) > 1:
        detail = ", ".join(f"{v.config_name}={v.outcome}" for v in results if v.conclusive)
        raise InconsistentVerdicts(f"portfolio members disagree: {detail}")
    if winner:
        return winner[0]
    best = min(results, key=lambda v: (_RANK[v.outcome], v.elapsed))
    return SolverVerdict(best.outcome, time.monotonic() - start, best.raw_output, best.config_name)


def solver_version(config: SolverConfig) -> str:
    from .config import resolve_executable

    try:
        cmd = resolve_executable(config)
    except SpawnFailure:
        return "unavailable"
    try:
        out = subprocess.run(cmd + ["--version"], capture_output=True, text=True, timeout=20)
    except (OSError, subprocess.TimeoutExpired):
        return "unknown"
    first = (out.stdout or out.stderr).strip().splitlines()
    return first[0] if first else "unknown"
