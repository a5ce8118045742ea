"""Proof certificates: JSON export of a proof tree and an independent checker.

Document layout (``format`` = ``indlemma-certificate``, ``version`` = 1)::

    {
      "format": "indlemma-certificate", "version": 1,
      "proved": true, "wall_time": 12.3,
      "tokens": {"prompt_tokens": 0, "completion_tokens": 0},
      "engine": {...engine settings...},
      "context_smt2": "<set-logic, declarations and axioms>",
      "root": NODE
    }

    NODE = {
      "path": "root/0", "depth": 1, "status": "ProvedDirect",
      "goal_smt2": "(forall ...)", "lemmas": ["(forall ...)", ...],
      "children": [NODE, ...],          # one per lemma, same order
      "solver": "cvc5-ind", "elapsed": 0.4, "memo_hit": false,
      "tokens": {...}, "timing": {...}, "attempts": [{...}, ...]
    }

A node is accepted when its recorded status is a proved one, the solver
finds axioms + lemmas + negated goal unsat, every child's goal is
alpha-equal to the matching lemma, and every child is accepted in turn.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .engine import ProofNode, ProofOutcome, verify
from .smtlib import (
    SmtlibError,
    Task,
    alpha_normalize,
    parse_formula,
    parse_script,
    render_term,
)
from .smtlib.printer import declaration_lines

FORMAT = "indlemma-certificate"
VERSION = 1
PROVED = ("ProvedDirect", "ProvedWithLemmas")


class CertificateError(ValueError):
    """The document is not a well-formed certificate."""


def context_smt2(task: Task) -> str:
    types, funs = declaration_lines(task)
    lines = [f"(set-logic {task.logic or 'ALL'})"] + types + funs
    lines += [f"(assert {render_term(a)})" for a in task.axioms]
    return "\n".join(lines) + "\n"


def _node(n: ProofNode) -> dict:
    return {
        "path": n.path,
        "depth": n.depth,
        "status": str(n.status),
        "goal_smt2": render_term(n.task.goal),
        "lemmas": [c.smt2 for c in n.conjectures],
        "children": [_node(c) for c in n.children],
        "solver": n.solver,
        "elapsed": round(n.elapsed, 3),
        "memo_hit": n.memo_hit,
        "tokens": asdict(n.usage),
        "timing": {k: round(v, 3) for k, v in asdict(n.timing).items()},
        "attempts": [asdict(a) for a in n.attempts],
    }


def emit_certificate(outcome: ProofOutcome) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "proved": outcome.proved,
        "wall_time": round(outcome.wall_time, 3),
        "tokens": asdict(outcome.usage),
        "queries": outcome.queries,
        "engine": outcome.config.describe(),
        "context_smt2": context_smt2(outcome.root.task),
        "root": _node(outcome.root),
    }


def write_certificate(outcome: ProofOutcome, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(emit_certificate(outcome), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_certificate(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise CertificateError(f"{path}: not valid JSON ({e})") from e
    validate(doc)
    return doc


def validate(doc) -> None:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CertificateError("not a certificate document")
    if doc.get("version") != VERSION:
        raise CertificateError(f"unsupported certificate version {doc.get('version')}")
    if not isinstance(doc.get("context_smt2"), str) or not isinstance(doc.get("root"), dict):
        raise CertificateError("missing context_smt2 or root")

    def walk(n, where):
        for key, typ in (("goal_smt2", str), ("status", str), ("lemmas", list),
                         ("children", list)):
            if not isinstance(n.get(key), typ):
                raise CertificateError(f"{where}: field {key} missing or malformed")
        for i, c in enumerate(n["children"]):
            if not isinstance(c, dict):
                raise CertificateError(f"{where}/{i}: node is not an object")
            walk(c, f"{where}/{i}")

    walk(doc["root"], "root")


@dataclass
class CheckReport:
    ok: bool = True
    checked: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)

    def fail(self, path: str, reason: str) -> None:
        self.ok = False
        self.failures.append((path, reason))


def check_certificate(doc: dict, configs=None, timeout: float = 60.0) -> CheckReport:
    """Re-solve every proved node of ``doc``; failures are reported by node path."""
    validate(doc)
    context = doc["context_smt2"]
    report = CheckReport()
    cache: dict = {}

    def task_for(goal_text: str, where: str) -> Task:
        try:
            return parse_script(context + f"; proof goal\n(assert {goal_text})\n")
        except SmtlibError as e:
            raise _NodeFailure(f"goal does not parse: {e}") from e

    def check(n: dict, where: str) -> bool:
        try:
            if n["status"] not in PROVED:
                raise _NodeFailure(f"status {n['status']} is not a proof")
            task = task_for(n["goal_smt2"], where)
            lemmas = []
            for text in n["lemmas"]:
                try:
                    f = parse_formula(text, task)
                    task.signature().check_formula(f)
                except SmtlibError as e:
                    raise _NodeFailure(f"lemma does not parse: {e}") from e
                lemmas.append(f)
            if len(n["children"]) != len(lemmas):
                raise _NodeFailure("children and lemmas differ in number")
            if n["status"] == "ProvedDirect" and lemmas:
                raise _NodeFailure("ProvedDirect node lists lemmas")
            key = (alpha_normalize(task.goal), tuple(alpha_normalize(f) for f in lemmas))
            if key not in cache:
                report.checked += 1
                cache[key] = verify(task, lemmas, timeout, configs)
            v = cache[key]
            if not v.unsat:
                raise _NodeFailure(f"obligation not unsat ({v.outcome})")
        except _NodeFailure as e:
            report.fail(where, str(e))
            return False
        ok = True
        for i, (lemma, child) in enumerate(zip(lemmas, n["children"])):
            cpath = f"{where}/{i}"
            try:
                child_goal = parse_formula(child["goal_smt2"], task)
            except SmtlibError as e:
                report.fail(cpath, f"goal does not parse: {e}")
                ok = False
                continue
            if alpha_normalize(child_goal) != alpha_normalize(lemma):
                report.fail(cpath, "goal differs from the parent's lemma")
                ok = False
                continue
            ok = check(child, cpath) and ok
        return ok

    check(doc["root"], "root")
    return report


class _NodeFailure(Exception):
    pass
