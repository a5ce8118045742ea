"""Solver obligations and the labeled three-section script shown to the model."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .printer import declaration_lines, render_term
from .terms import Task, Term

DATATYPE_LABEL = "; datatype definitions"
FUNCTION_LABEL = "; function definitions"
GOAL_LABEL = "; proof goal"

DEFAULT_LOGIC = "ALL"


@dataclass(frozen=True)
class LabeledScript:
    datatype_section: str
    function_section: str
    goal_section: str
    full_text: str


def _formula(c) -> Term:
    # accepts a bare Term or anything carrying one in .formula (Conjecture)
    return getattr(c, "formula", c)


def _logic_line(task: Task) -> list[str]:
    return [f"(set-logic {task.logic or DEFAULT_LOGIC})"]


def preprocess_label(task: Task) -> LabeledScript:
    types, funs = declaration_lines(task)
    funs = funs + [f"(assert {render_term(a)})" for a in task.axioms]
    dt = "\n".join([DATATYPE_LABEL] + types)
    fn = "\n".join([FUNCTION_LABEL] + funs)
    goal = "\n".join([GOAL_LABEL, f"(assert {render_term(task.goal)})"])
    logic = f"(set-logic {task.logic})\n" if task.logic else ""
    full = logic + "\n".join([dt, fn, goal]) + "\n"
    return LabeledScript(dt, fn, goal, full)


def _check(task: Task, conjectures) -> list[Term]:
    sig = task.signature()
    out = []
    for c in conjectures:
        f = _formula(c)
        sig.check_formula(f)
        out.append(f)
    return out


def _script(task: Task, asserts: list[Term]) -> str:
    types, funs = declaration_lines(task)
    lines = _logic_line(task) + types + funs
    lines += [f"(assert {render_term(a)})" for a in asserts]
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def build_proof_obligation(task: Task, conjectures=()) -> str:
    """Axioms, each conjecture, then the negated goal.  Unsat means proved."""
    extra = _check(task, conjectures)
    from .terms import mk_not

    return _script(task, list(task.axioms) + extra + [mk_not(task.goal)])


def build_consistency_obligation(task: Task, c) -> str:
    """Axioms and ``c`` asserted positively.  Unsat means ``c`` contradicts A."""
    (f,) = _check(task, [c])
    return _script(task, list(task.axioms) + [f])


def build_subgoal_task(task: Task, c) -> Task:
    """Same declarations and axioms, goal replaced by ``c``; siblings are not premises."""
    (f,) = _check(task, [c])
    return replace(task, goal=f)
