"""Recursive lemma-guided proof search.

``prove_run`` first tries the goal directly.  Failing that, and while the
depth bound allows, it asks the model for conjectures with each prompt
strategy (several sampling iterations each), filters them, checks that
they imply the goal, and then proves every conjecture as a sub-goal of its
own.  Sub-goals of one attempt run concurrently; the first failing sibling
cancels the rest and the search moves on to the next iteration.

All solver calls and model queries draw from one wall-clock budget set at
the root.  Cancellation is cooperative: every solver call and query checks
the node's cancel scope first, and running solver processes are killed
when the scope is cancelled.
"""

from __future__ import annotations

import enum
import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace

from .filtering import filter_batch
from .llm import (
    DEFAULT_POOL,
    LLMClient,
    PromptStrategy,
    Provenance,
    ProviderError,
    ReplayMiss,
    Usage,
    extract_conjectures,
    render_prompt,
)
from .smtlib import (
    Task,
    alpha_normalize,
    build_proof_obligation,
    build_subgoal_task,
    preprocess_label,
    render_term,
)
from .solvers import DEFAULT_BACKEND, DEFAULT_FILTER, run_portfolio, select

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EngineConfig:
    max_depth: int = 3
    max_iter_number: int = 3
    prompt_pool: tuple[PromptStrategy, ...] = DEFAULT_POOL
    task_time_limit: float = 1200.0
    initial_check_timeout: float = 60.0
    verify_timeout: float = 60.0
    filter_timeout: float = 1.0
    subgoal_parallelism: int = 4
    conjecture_cap: int = 3
    filter_mode: str = "strict"
    engine_off: bool = False

    def __post_init__(self):
        for name in ("max_depth", "max_iter_number", "subgoal_parallelism", "conjecture_cap"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("task_time_limit", "initial_check_timeout", "verify_timeout",
                     "filter_timeout"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not self.prompt_pool:
            raise ValueError("prompt pool is empty")

    def describe(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "prompt_pool"}
        d["prompt_pool"] = [s.id.value for s in self.prompt_pool]
        return d


class Status(str, enum.Enum):
    PROVED_DIRECT = "ProvedDirect"
    PROVED_WITH_LEMMAS = "ProvedWithLemmas"
    FAILED = "Failed"
    BUDGET = "BudgetExhausted"

    def __str__(self) -> str:
        return self.value

    @property
    def proved(self) -> bool:
        return self in (Status.PROVED_DIRECT, Status.PROVED_WITH_LEMMAS)


@dataclass
class Attempt:
    strategy: str
    iteration: int
    result: str = "pending"
    conjectures: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    filter: str = ""
    filter_verdicts: list[str] = field(default_factory=list)
    verify: str = ""
    children: list[str] = field(default_factory=list)
    prompt_tokens: int = 0
    completion_tokens: int = 0
    error: str = ""


@dataclass
class Timing:
    initial_check: float = 0.0
    query: float = 0.0
    filter: float = 0.0
    verify: float = 0.0
    subgoal: float = 0.0


@dataclass
class ProofNode:
    task: Task
    depth: int
    path: str = "root"
    status: Status = Status.FAILED
    conjectures: list = field(default_factory=list)
    children: list["ProofNode"] = field(default_factory=list)
    timing: Timing = field(default_factory=Timing)
    attempts: list[Attempt] = field(default_factory=list)
    solver: str = ""
    usage: Usage = field(default_factory=Usage)
    elapsed: float = 0.0
    memo_hit: bool = False

    @property
    def proved(self) -> bool:
        return self.status.proved

    def height(self) -> int:
        return 1 + max((c.height() for c in self.children), default=-1)

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass
class ProofOutcome:
    proved: bool
    root: ProofNode
    wall_time: float
    usage: Usage
    queries: int
    config: EngineConfig

    @property
    def attempts(self) -> int:
        return sum(len(n.attempts) for n in self.root.walk())


class _Budget(Exception):
    pass


class _Cancelled(Exception):
    pass


class CancelScope:
    """Cancel flag that is also set when any enclosing scope is cancelled."""

    def __init__(self, parent: "CancelScope | None" = None):
        self.parent = parent
        self._event = threading.Event()

    def cancel(self) -> None:
        self._event.set()

    def is_set(self) -> bool:
        s = self
        while s is not None:
            if s._event.is_set():
                return True
            s = s.parent
        return False

    def child(self) -> "CancelScope":
        return CancelScope(self)


class _Run:
    """State shared by every node of one root task."""

    def __init__(self, deadline: float, trace):
        self.deadline = deadline
        self.start = time.monotonic()
        self.usage = Usage()
        self.queries = 0
        self.memo: dict = {}
        self.lock = threading.Lock()
        self.trace = trace

    def remaining(self) -> float:
        return self.deadline - time.monotonic()

    def emit(self, event: str, **data) -> None:
        if self.trace is None:
            return
        rec = {"event": event, "t": round(time.monotonic() - self.start, 3), **data}
        with self.lock:
            self.trace.write(json.dumps(rec, sort_keys=True) + "\n")
            self.trace.flush()


def initial_check(task: Task, timeout: float, configs=None, cancel=None):
    """Portfolio verdict on the goal with no extra lemmas."""
    configs = configs or select(DEFAULT_BACKEND)
    return run_portfolio(build_proof_obligation(task, []), configs, timeout, cancel)


def verify(task: Task, C, timeout: float, configs=None, cancel=None):
    """Portfolio verdict on axioms plus ``C`` against the negated goal."""
    configs = configs or select(DEFAULT_BACKEND)
    return run_portfolio(build_proof_obligation(task, C), configs, timeout, cancel)


class ProofEngine:
    def __init__(self, cfg: EngineConfig | None = None, client: LLMClient | None = None,
                 backend=None, filter_configs=None, trace=None):
        self.cfg = cfg or EngineConfig()
        if client is None and not self.cfg.engine_off:
            raise ValueError("a model client is required unless the engine is off")
        self.client = client
        self.backend = list(backend) if backend else select(DEFAULT_BACKEND)
        self.filter_configs = list(filter_configs) if filter_configs else select(DEFAULT_FILTER)
        self.trace = trace

    # ------------------------------------------------------------ entry point
    def prove_task(self, task: Task) -> ProofOutcome:
        ctx = _Run(time.monotonic() + self.cfg.task_time_limit, self.trace)
        root = self.prove_run(task, 0, ctx, CancelScope(), (), "root")
        wall = time.monotonic() - ctx.start
        return ProofOutcome(root.proved, root, wall, ctx.usage, ctx.queries, self.cfg)

    # ------------------------------------------------------------ helpers
    def _guard(self, ctx: _Run, scope: CancelScope) -> float:
        if scope.is_set():
            raise _Cancelled()
        left = ctx.remaining()
        if left <= 0:
            raise _Budget()
        return left

    def _solve(self, script_task, C, timeout, ctx, scope):
        left = self._guard(ctx, scope)
        return verify(script_task, C, min(timeout, left), self.backend, scope)

    # ------------------------------------------------------------ prove_run
    def prove_run(self, task: Task, depth: int, ctx: _Run, scope: CancelScope,
                  ancestors: tuple, path: str) -> ProofNode:
        cfg = self.cfg
        node = ProofNode(task, depth, path)
        start = time.monotonic()
        key = alpha_normalize(task.goal)
        ctx.emit("node-open", path=path, depth=depth, goal=render_term(task.goal))
        try:
            with ctx.lock:
                hit = ctx.memo.get(key)
            if hit is not None and depth + hit.height() <= cfg.max_depth:
                node = _reuse(hit, depth, path)
                return node

            timeout = cfg.task_time_limit if cfg.engine_off else cfg.initial_check_timeout
            t0 = time.monotonic()
            v = self._solve(task, [], timeout, ctx, scope)
            node.timing.initial_check += time.monotonic() - t0
            if v.unsat:
                node.status, node.solver = Status.PROVED_DIRECT, v.config_name
                return node
            if cfg.engine_off or depth >= cfg.max_depth:
                node.status = Status.FAILED
                return node

            lineage = ancestors + (key,)
            for strat in cfg.prompt_pool:
                for it in range(1, cfg.max_iter_number + 1):
                    attempt = Attempt(strat.id.value, it)
                    node.attempts.append(attempt)
                    try:
                        if self._attempt(task, strat, it, node, attempt, ctx, scope, depth,
                                         lineage, path):
                            return node
                    except (_Budget, _Cancelled) as e:
                        attempt.result = "budget" if isinstance(e, _Budget) else "cancelled"
                        raise
                    finally:
                        ctx.emit("attempt", path=path, strategy=attempt.strategy,
                                 iteration=it, result=attempt.result,
                                 conjectures=attempt.conjectures)
                    self._guard(ctx, scope)
            node.status = Status.FAILED
            return node
        except (_Budget, _Cancelled) as e:
            node.status = Status.BUDGET
            if node.attempts and node.attempts[-1].result == "pending":
                node.attempts[-1].result = "budget" if isinstance(e, _Budget) else "cancelled"
            return node
        finally:
            node.elapsed = time.monotonic() - start
            if node.proved and not node.memo_hit:
                with ctx.lock:
                    ctx.memo.setdefault(key, node)
            ctx.emit("node-close", path=path, status=str(node.status),
                     elapsed=round(node.elapsed, 3), attempts=len(node.attempts))

    def _attempt(self, task, strat, it, node, attempt, ctx, scope, depth, lineage, path) -> bool:
        """One Prove call plus sub-goal recursion; True when ``node`` is now proved."""
        ok, C = self.prove(task, strat, it, node, attempt, ctx, scope)
        if not ok:
            return False
        circular = [c for c in C if alpha_normalize(c.formula) in lineage]
        if circular:
            attempt.result = "ancestor-conjecture"
            attempt.error = circular[0].raw_text
            return False
        if not C:
            node.status, node.solver = Status.PROVED_DIRECT, attempt.verify
            return True
        kids = self._subgoals(task, C, depth, ctx, scope, lineage, path, node)
        attempt.children = [str(k.status) for k in kids]
        if all(k.proved for k in kids):
            attempt.result = "proved"
            node.status = Status.PROVED_WITH_LEMMAS
            node.conjectures, node.children = list(C), kids
            node.solver = attempt.verify
            return True
        attempt.result = "subgoal-failed"
        return False

    def _subgoals(self, task, C, depth, ctx, scope, lineage, path, node) -> list[ProofNode]:
        attempt_scope = scope.child()
        t0 = time.monotonic()
        results: list[ProofNode | None] = [None] * len(C)
        workers = min(self.cfg.subgoal_parallelism, len(C))
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="subgoal") as ex:
            futures = {
                ex.submit(self.prove_run, build_subgoal_task(task, c), depth + 1, ctx,
                          attempt_scope.child(), lineage, f"{path}/{i}"): i
                for i, c in enumerate(C)
            }
            for fut in as_completed(futures):
                kid = fut.result()
                results[futures[fut]] = kid
                if not kid.proved:
                    attempt_scope.cancel()
        node.timing.subgoal += time.monotonic() - t0
        return results

    # ------------------------------------------------------------ prove
    def prove(self, task: Task, strategy: PromptStrategy, iteration: int, node: ProofNode,
              attempt: Attempt, ctx: _Run, scope: CancelScope):
        """One query, filter and verify round; returns (ok, conjectures)."""
        cfg = self.cfg
        prompt = render_prompt(strategy, preprocess_label(task))
        left = self._guard(ctx, scope)
        t0 = time.monotonic()
        try:
            resp = self.client.query(prompt, iteration, timeout=left)
        except ReplayMiss as e:
            attempt.result, attempt.error = "replay-miss", str(e)
            return False, []
        except ProviderError as e:
            attempt.result, attempt.error = "provider-error", str(e)
            return False, []
        finally:
            node.timing.query += time.monotonic() - t0
        with ctx.lock:
            ctx.usage.add(resp.usage)
            ctx.queries += 1
        node.usage.add(resp.usage)
        attempt.prompt_tokens = resp.usage.prompt_tokens
        attempt.completion_tokens = resp.usage.completion_tokens

        diags: list = []
        prov = Provenance(strategy.id.value, iteration, node.depth, self.client.config.model)
        tokens = (resp.usage.prompt_tokens, resp.usage.completion_tokens)
        C = extract_conjectures(resp.text, task, cfg.conjecture_cap, prov, tokens, diags)
        attempt.conjectures = [c.smt2 for c in C]
        attempt.diagnostics = [f"{d.reason}: {d.text}" for d in diags]

        left = self._guard(ctx, scope)
        t0 = time.monotonic()
        batch = filter_batch(C, task, min(cfg.filter_timeout, left), cfg.filter_mode,
                             self.filter_configs, scope)
        node.timing.filter += time.monotonic() - t0
        attempt.filter = str(batch)
        attempt.filter_verdicts = [str(v) for v in batch.verdicts]
        if not batch.all_pass:
            attempt.result = "filter-rejected"
            return False, []
        C = list(batch.accepted)

        t0 = time.monotonic()
        v = self._solve(task, C, cfg.verify_timeout, ctx, scope)
        node.timing.verify += time.monotonic() - t0
        attempt.verify = v.config_name if v.unsat else str(v.outcome)
        if not v.unsat:
            attempt.result = "verify-failed"
            return False, []
        attempt.result = "verified"
        return True, C


def _reuse(hit: ProofNode, depth: int, path: str) -> ProofNode:
    """A proved subtree found in the memo, relocated to a new position."""

    def relocate(n: ProofNode, d: int, p: str) -> ProofNode:
        kids = [relocate(c, d + 1, f"{p}/{i}") for i, c in enumerate(n.children)]
        return replace(n, depth=d, path=p, children=kids, attempts=[], usage=Usage(),
                       timing=Timing(), elapsed=0.0, memo_hit=True)

    return relocate(hit, depth, path)


def prove_run(task: Task, cfg: EngineConfig, client: LLMClient | None = None,
              backend=None, filter_configs=None, trace=None) -> ProofOutcome:
    return ProofEngine(cfg, client, backend, filter_configs, trace).prove_task(task)
