"""Render terms and tasks back to SMT-LIB2 text."""

from __future__ import annotations

from .sexp import quote_symbol
from .terms import (
    App,
    Const,
    DatatypeDecl,
    FunctionDef,
    Quant,
    Sort,
    Task,
    Term,
    Var,
    tester_constructor,
)


def render_sort(s: Sort) -> str:
    if not s.args:
        return quote_symbol(s.name)
    return "(" + " ".join([quote_symbol(s.name)] + [render_sort(a) for a in s.args]) + ")"


def _render_head(head: str) -> str:
    cons = tester_constructor(head)
    if cons is not None:
        return f"(_ is {quote_symbol(cons)})"
    return quote_symbol(head)


def render_term(t: Term) -> str:
    parts: list[str] = []
    _emit(t, parts)
    return "".join(parts)


def _emit(t: Term, out: list[str]) -> None:
    # iterative on App chains would be faster; recursion depth is bounded by term depth
    if isinstance(t, Var):
        out.append(quote_symbol(t.name))
    elif isinstance(t, Const):
        if isinstance(t.value, bool):
            out.append("true" if t.value else "false")
        elif t.value < 0:
            out.append(f"(- {-t.value})")
        else:
            out.append(str(t.value))
    elif isinstance(t, App):
        head = _render_head(t.head)
        if t.ascribed:
            head = f"(as {head} {render_sort(t.sort)})"
        if not t.args:
            out.append(head)
            return
        out.append("(")
        out.append(head)
        for a in t.args:
            out.append(" ")
            _emit(a, out)
        out.append(")")
    elif isinstance(t, Quant):
        binders = " ".join(f"({quote_symbol(n)} {render_sort(s)})" for n, s in t.bound)
        out.append(f"({t.kind} ({binders}) ")
        _emit(t.body, out)
        out.append(")")
    else:
        raise TypeError(f"not a term: {t!r}")


def _render_constructors(d: DatatypeDecl) -> str:
    cons = []
    for c in d.constructors:
        fields = "".join(f" ({quote_symbol(s)} {render_sort(srt)})" for s, srt in c.fields)
        cons.append(f"({quote_symbol(c.name)}{fields})")
    body = "(" + " ".join(cons) + ")"
    if d.params:
        return f"(par ({' '.join(map(quote_symbol, d.params))}) {body})"
    return body


def render_datatype_group(group: tuple[DatatypeDecl, ...]) -> str:
    if len(group) == 1 and not group[0].params:
        d = group[0]
        return f"(declare-datatype {quote_symbol(d.name)} {_render_constructors(d)})"
    heads = " ".join(f"({quote_symbol(d.name)} {d.arity})" for d in group)
    bodies = " ".join(_render_constructors(d) for d in group)
    return f"(declare-datatypes ({heads}) ({bodies}))"


def _params(f: FunctionDef) -> str:
    return "(" + " ".join(f"({quote_symbol(n)} {render_sort(s)})" for n, s in f.params) + ")"


def render_function_group(group: tuple[FunctionDef, ...]) -> str:
    if len(group) > 1:
        decls = " ".join(
            f"({quote_symbol(f.name)} {_params(f)} {render_sort(f.ret)})" for f in group
        )
        bodies = " ".join(render_term(f.body) for f in group)
        return f"(define-funs-rec ({decls}) ({bodies}))"
    f = group[0]
    name = quote_symbol(f.name)
    if f.kind == "declare":
        args = " ".join(render_sort(s) for _, s in f.params)
        return f"(declare-fun {name} ({args}) {render_sort(f.ret)})"
    cmd = "define-fun-rec" if f.kind == "rec" else "define-fun"
    return f"({cmd} {name} {_params(f)} {render_sort(f.ret)} {render_term(f.body)})"


def declaration_lines(task: Task) -> tuple[list[str], list[str]]:
    """(sort and datatype declarations, function declarations) as lines."""
    types = [f"(declare-sort {quote_symbol(n)} {a})" for n, a in task.sort_decls]
    types += [render_datatype_group(g) for g in task.datatypes]
    funs = [render_function_group(g) for g in task.functions]
    return types, funs


def render_script(task: Task, extra: tuple[Term, ...] = (), negate_goal: bool = True,
                  default_logic: str | None = None) -> str:
    """Standard script: declarations, one assert per axiom, negated goal, check-sat."""
    lines = []
    logic = task.logic or default_logic
    if logic:
        lines.append(f"(set-logic {logic})")
    types, funs = declaration_lines(task)
    lines += types + funs
    lines += [f"(assert {render_term(a)})" for a in task.axioms]
    lines += [f"(assert {render_term(c)})" for c in extra]
    goal = render_term(task.goal)
    lines.append(f"(assert (not {goal}))" if negate_goal else f"(assert {goal})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
