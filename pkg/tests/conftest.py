import socket

import pytest

from indlemma.llm import LLMClient, ModelConfig
from indlemma.resources import running_example, suite_dir, transcripts_dir
from indlemma.smtlib import parse_file

NAT = """\
(set-logic ALL)
(declare-datatype Nat ((zero) (succ (pred Nat))))
(declare-fun plus (Nat Nat) Nat)
(declare-fun mult (Nat Nat) Nat)
(assert (forall ((y Nat)) (= (plus zero y) y)))
(assert (forall ((x Nat) (y Nat)) (= (plus (succ x) y) (succ (plus x y)))))
(assert (forall ((y Nat)) (= (mult zero y) zero)))
(assert (forall ((x Nat) (y Nat)) (= (mult (succ x) y) (plus (mult x y) y))))
(assert (not (forall ((x Nat) (y Nat)) (= (mult x y) (mult y x)))))
(check-sat)
"""


@pytest.fixture(scope="session")
def nat_task():
    return parse_file(running_example())


@pytest.fixture(scope="session")
def leq_task():
    return parse_file(suite_dir() / "nat_leq_plus.smt2")


@pytest.fixture(scope="session")
def list_task():
    return parse_file(suite_dir() / "list_rev_rev.smt2")


@pytest.fixture
def replay_model():
    return ModelConfig(mode="replay", transcripts=str(transcripts_dir()))


@pytest.fixture
def replay_client(replay_model):
    return LLMClient(replay_model)


class NetworkDenied(RuntimeError):
    pass


@pytest.fixture
def no_network(monkeypatch):
    """Fail any attempt to open an internet socket; local pipes still work."""
    real_connect = socket.socket.connect

    def guarded(self, address):
        if self.family in (socket.AF_INET, socket.AF_INET6):
            raise NetworkDenied(f"network access attempted: {address}")
        return real_connect(self, address)

    def deny(*a, **k):
        raise NetworkDenied("network access attempted")

    monkeypatch.setattr(socket.socket, "connect", guarded)
    monkeypatch.setattr(socket, "create_connection", deny)
    monkeypatch.setattr(socket, "getaddrinfo", deny)


# ---------------------------------------------------------------- acceptance report
# Tests marked ``@pytest.mark.criterion(n, "label")`` are rolled up into one
# PASS/FAIL/SKIP line per criterion at the end of the run.

_criteria: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    rep = outcome.get_result()
    n, label = mark.args
    entry = _criteria.setdefault(n, {"label": label, "results": {}})
    prev = entry["results"].get(item.nodeid)
    if rep.failed:
        entry["results"][item.nodeid] = "failed"
    elif rep.skipped and prev is None:
        entry["results"][item.nodeid] = "skipped"
    elif rep.when == "call" and rep.passed and prev is None:
        entry["results"][item.nodeid] = "passed"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        entry = _criteria[n]
        results = list(entry["results"].values())
        if "failed" in results:
            verdict = "FAIL"
        elif results and all(r == "skipped" for r in results):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        detail = ", ".join(f"{results.count(k)} {k}" for k in ("passed", "failed", "skipped")
                           if results.count(k))
        terminalreporter.write_line(f"criterion {n}: {verdict}  {entry['label']} ({detail})")
