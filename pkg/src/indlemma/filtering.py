"""Cheap rejection of bad conjectures before any expensive verification."""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

from .smtlib import (
    SmtlibError,
    Task,
    alpha_normalize,
    build_consistency_obligation,
    parse_formula,
)
from .solvers import DEFAULT_FILTER, InconsistentVerdicts, SpawnFailure, run_portfolio, select

log = logging.getLogger(__name__)

FILTER_MODES = ("strict", "drop-bad")


class Decision(str, enum.Enum):
    PASS = "Pass"
    FILTERED = "Filtered"

    def __str__(self) -> str:
        return self.value


class Reason(str, enum.Enum):
    SYNTAX = "SyntaxError"
    IDENTICAL = "IdenticalToGoal"
    INCONSISTENT = "InconsistentWithAxioms"
    NONE = "None"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class FilterVerdict:
    decision: Decision
    reason: Reason
    elapsed: float
    detail: str = ""

    def __post_init__(self):
        if (self.decision is Decision.FILTERED) != (self.reason is not Reason.NONE):
            raise ValueError("Filtered verdicts need a reason and Pass verdicts must not have one")

    @property
    def filtered(self) -> bool:
        return self.decision is Decision.FILTERED

    def __str__(self) -> str:
        return f"Filtered: {self.reason}" if self.filtered else "Pass"


def _formula(c, task: Task):
    if isinstance(c, str):
        f = parse_formula(c, task)
        task.signature().check_formula(f)
        return f
    return getattr(c, "formula", c)


def is_filtered(c, task: Task, filter_timeout: float = 1.0, configs=None,
                cancel=None) -> FilterVerdict:
    """Syntax, then identity with the goal, then inconsistency with the axioms.

    Only an unsat answer on axioms plus ``c`` filters; sat, unknown and
    timeout pass.  Solver trouble also passes, since verification
    downstream remains the safeguard.
    """
    start = time.monotonic()
    try:
        f = _formula(c, task)
    except SmtlibError as e:
        return FilterVerdict(Decision.FILTERED, Reason.SYNTAX, time.monotonic() - start, str(e))
    if alpha_normalize(f) == alpha_normalize(task.goal):
        return FilterVerdict(Decision.FILTERED, Reason.IDENTICAL, time.monotonic() - start)
    configs = list(configs) if configs is not None else select(DEFAULT_FILTER)
    try:
        script = build_consistency_obligation(task, f)
        v = run_portfolio(script, configs, filter_timeout, cancel)
    except SmtlibError as e:
        return FilterVerdict(Decision.FILTERED, Reason.SYNTAX, time.monotonic() - start, str(e))
    except (SpawnFailure, InconsistentVerdicts, OSError) as e:
        log.warning("consistency check unavailable, passing conjecture: %s", e)
        return FilterVerdict(Decision.PASS, Reason.NONE, time.monotonic() - start,
                             f"solver failure: {e}")
    elapsed = time.monotonic() - start
    if v.unsat:
        return FilterVerdict(Decision.FILTERED, Reason.INCONSISTENT, elapsed, v.config_name)
    return FilterVerdict(Decision.PASS, Reason.NONE, elapsed, str(v.outcome))


@dataclass(frozen=True)
class BatchResult:
    accepted: tuple = ()
    verdicts: tuple[FilterVerdict, ...] = ()
    rejected_index: int | None = None
    dropped: tuple[int, ...] = field(default=())

    @property
    def all_pass(self) -> bool:
        return self.rejected_index is None

    @property
    def rejection(self) -> FilterVerdict | None:
        return None if self.all_pass else self.verdicts[self.rejected_index]

    def __str__(self) -> str:
        if self.all_pass:
            return "AllPass"
        return f"BatchRejected({self.rejected_index}, {self.rejection.reason})"


def filter_batch(C, task: Task, filter_timeout: float = 1.0, mode: str = "strict",
                 configs=None, cancel=None) -> BatchResult:
    """Filter in order.  In strict mode the first filtered conjecture rejects the batch.

    ``drop-bad`` keeps the survivors instead and only rejects when none
    survive.
    """
    if mode not in FILTER_MODES:
        raise ValueError(f"filter mode must be one of {FILTER_MODES}")
    C = list(C)
    verdicts = []
    kept = []
    dropped = []
    for i, c in enumerate(C):
        v = is_filtered(c, task, filter_timeout, configs, cancel)
        verdicts.append(v)
        if not v.filtered:
            kept.append(c)
            continue
        if mode == "strict":
            return BatchResult((), tuple(verdicts), i)
        dropped.append(i)
    if C and not kept:
        return BatchResult((), tuple(verdicts), dropped[0], tuple(dropped))
    return BatchResult(tuple(kept), tuple(verdicts), None, tuple(dropped))


__all__ = [
    "BatchResult", "Decision", "FILTER_MODES", "FilterVerdict", "Reason",
    "filter_batch", "is_filtered",
]
