"""Sorts, terms and task containers for the supported SMT-LIB2 fragment.

All values are frozen dataclasses so they can be shared freely between
worker threads.  Builtin connectives (``not``, ``and``, ``=``, ``ite``,
arithmetic, ...) are ordinary :class:`App` nodes with reserved heads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Union


class SmtlibError(ValueError):
    """Base class for front-end errors; carries an optional position."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        self.message = message
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)


class UnknownSymbol(SmtlibError):
    pass


class SortMismatch(SmtlibError):
    pass


class NoGoalFound(SmtlibError):
    pass


class MultipleGoals(SmtlibError):
    pass


class IllSortedConjecture(SmtlibError):
    pass


@dataclass(frozen=True)
class Sort:
    name: str
    args: tuple["Sort", ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def kind(self) -> str:
        if self.name in ("Bool", "Int") and not self.args:
            return "builtin"
        return "parametric-instance" if self.args else "declared"

    def substitute(self, mapping: dict[str, "Sort"]) -> "Sort":
        if not self.args and self.name in mapping:
            return mapping[self.name]
        if not self.args:
            return self
        return Sort(self.name, tuple(a.substitute(mapping) for a in self.args))

    def __str__(self) -> str:
        from .printer import render_sort

        return render_sort(self)


BOOL = Sort("Bool")
INT = Sort("Int")


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort


@dataclass(frozen=True)
class Const:
    value: Union[int, bool]
    sort: Sort


@dataclass(frozen=True)
class App:
    head: str
    args: tuple["Term", ...]
    sort: Sort
    # print as (as head sort); only needed for nullary parametric constructors
    ascribed: bool = False


@dataclass(frozen=True)
class Quant:
    kind: str  # "forall" | "exists"
    bound: tuple[tuple[str, Sort], ...]
    body: "Term"

    @property
    def sort(self) -> Sort:
        return BOOL


Term = Union[Var, Const, App, Quant]

TRUE = Const(True, BOOL)
FALSE = Const(False, BOOL)


def tester_head(constructor: str) -> str:
    return f"(_ is {constructor})"


def tester_constructor(head: str) -> str | None:
    if head.startswith("(_ is ") and head.endswith(")"):
        return head[6:-1]
    return None


def mk_not(t: Term) -> App:
    return App("not", (t,), BOOL)


def mk_eq(a: Term, b: Term) -> App:
    return App("=", (a, b), BOOL)


def mk_forall(bound, body: Term) -> Term:
    bound = tuple(bound)
    return Quant("forall", bound, body) if bound else body


# ---------------------------------------------------------------- traversal


def subterms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        cur = stack.pop()
        yield cur
        if isinstance(cur, App):
            stack.extend(reversed(cur.args))
        elif isinstance(cur, Quant):
            stack.append(cur.body)


def free_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Const):
        return set()
    if isinstance(t, App):
        out: set[str] = set()
        for a in t.args:
            out |= free_vars(a)
        return out
    return free_vars(t.body) - {n for n, _ in t.bound}


def is_closed(t: Term) -> bool:
    return not free_vars(t)


def function_symbols(t: Term) -> set[str]:
    return {s.head for s in subterms(t) if isinstance(s, App)}


def fresh_name(base: str, avoid: set[str]) -> str:
    for k in itertools.count():
        cand = f"{base}!{k}"
        if cand not in avoid:
            return cand
    raise AssertionError("unreachable")


def substitute(t: Term, mapping: dict[str, Term]) -> Term:
    """Capture-avoiding substitution of free variables by terms."""
    if not mapping:
        return t
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, Const):
        return t
    if isinstance(t, App):
        return App(t.head, tuple(substitute(a, mapping) for a in t.args), t.sort, t.ascribed)
    inner = {k: v for k, v in mapping.items() if k not in {n for n, _ in t.bound}}
    if not inner:
        return t
    incoming: set[str] = set()
    for v in inner.values():
        incoming |= free_vars(v)
    bound = []
    renames: dict[str, Term] = {}
    avoid = incoming | free_vars(t.body) | {n for n, _ in t.bound}
    for name, sort in t.bound:
        if name in incoming:
            new = fresh_name(name, avoid)
            avoid.add(new)
            renames[name] = Var(new, sort)
            bound.append((new, sort))
        else:
            bound.append((name, sort))
    body = substitute(t.body, renames) if renames else t.body
    return Quant(t.kind, tuple(bound), substitute(body, inner))


# ---------------------------------------------------------------- declarations


@dataclass(frozen=True)
class Constructor:
    name: str
    fields: tuple[tuple[str, Sort], ...] = ()


@dataclass(frozen=True)
class DatatypeDecl:
    name: str
    constructors: tuple[Constructor, ...]
    params: tuple[str, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple[tuple[str, Sort], ...]
    ret: Sort
    kind: str = "declare"  # declare | define | rec
    body: Term | None = None


@dataclass(frozen=True)
class Task:
    datatypes: tuple[tuple[DatatypeDecl, ...], ...]
    functions: tuple[tuple[FunctionDef, ...], ...]
    axioms: tuple[Term, ...]
    goal: Term
    sort_decls: tuple[tuple[str, int], ...] = ()
    logic: str | None = None
    options: tuple[tuple[str, str], ...] = field(default=(), compare=False)
    source_path: str | None = field(default=None, compare=False)

    def all_datatypes(self) -> list[DatatypeDecl]:
        return [d for group in self.datatypes for d in group]

    def all_functions(self) -> list[FunctionDef]:
        return [f for group in self.functions for f in group]

    def signature(self) -> "Signature":
        return Signature.of_task(self)

    def definition_form(self, name: str):
        """('rec', body) | ('axioms', [axiom, ...]) | ('uninterpreted', None)."""
        for f in self.all_functions():
            if f.name == name:
                if f.body is not None:
                    return ("rec", f.body)
                uses = [a for a in self.axioms if name in function_symbols(a)]
                return ("axioms", uses) if uses else ("uninterpreted", None)
        raise KeyError(name)


# ---------------------------------------------------------------- signatures

_BOOL_NARY = {"and", "or", "xor", "=>"}
_INT_CMP = {"<=", "<", ">=", ">"}
_INT_NARY = {"+", "*"}
BUILTIN_HEADS = _BOOL_NARY | _INT_CMP | _INT_NARY | {
    "not", "=", "distinct", "ite", "-", "div", "mod", "abs",
}


@dataclass(frozen=True)
class FunSig:
    params: tuple[Sort, ...]
    ret: Sort
    type_params: tuple[str, ...] = ()
    role: str = "function"  # function | constructor | selector


def unify(pattern: Sort, actual: Sort, tvars: tuple[str, ...], subst: dict[str, Sort]) -> bool:
    if not pattern.args and pattern.name in tvars:
        bound = subst.get(pattern.name)
        if bound is None:
            subst[pattern.name] = actual
            return True
        return bound == actual
    if pattern.name != actual.name or len(pattern.args) != len(actual.args):
        return False
    return all(unify(p, a, tvars, subst) for p, a in zip(pattern.args, actual.args))


class Signature:
    """Sorts and function symbols visible to the terms of one task."""

    def __init__(self) -> None:
        self.sorts: dict[str, int] = {"Bool": 0, "Int": 0}
        self.funs: dict[str, FunSig] = {}
        self.constructors: dict[str, str] = {}  # constructor -> datatype name
        self.datatypes: dict[str, DatatypeDecl] = {}

    @classmethod
    def of_task(cls, task: Task) -> "Signature":
        sig = cls()
        for name, arity in task.sort_decls:
            sig.sorts[name] = arity
        for group in task.datatypes:
            sig.add_datatypes(group)
        for group in task.functions:
            for f in group:
                sig.add_function(f)
        return sig

    def add_datatypes(self, group) -> None:
        for d in group:
            self.sorts[d.name] = d.arity
        for d in group:
            self.datatypes[d.name] = d
            dt_sort = Sort(d.name, tuple(Sort(p) for p in d.params))
            for c in d.constructors:
                self.constructors[c.name] = d.name
                self.funs[c.name] = FunSig(
                    tuple(s for _, s in c.fields), dt_sort, d.params, "constructor"
                )
                for sel, s in c.fields:
                    self.funs[sel] = FunSig((dt_sort,), s, d.params, "selector")

    def add_function(self, f: FunctionDef) -> None:
        self.funs[f.name] = FunSig(tuple(s for _, s in f.params), f.ret)

    def check_sort(self, s: Sort, tvars: tuple[str, ...] = ()) -> None:
        if not s.args and s.name in tvars:
            return
        if s.name not in self.sorts:
            raise UnknownSymbol(f"unknown sort {s.name}")
        if self.sorts[s.name] != len(s.args):
            raise SortMismatch(f"sort {s.name} expects {self.sorts[s.name]} parameters")
        for a in s.args:
            self.check_sort(a, tvars)

    def needs_ascription(self, head: str) -> bool:
        sig = self.funs.get(head)
        if sig is None or sig.role != "constructor" or not sig.type_params:
            return False
        used = set()
        for p in sig.params:
            used |= _sort_names(p)
        return any(tv not in used for tv in sig.type_params)

    def apply_sort(self, head: str, arg_sorts: list[Sort], expected: Sort | None = None) -> Sort:
        """Result sort of ``head`` applied to arguments of ``arg_sorts``."""
        n = len(arg_sorts)
        if head == "not":
            self._expect_all(head, arg_sorts, BOOL, exact=1)
            return BOOL
        if head in _BOOL_NARY:
            self._expect_all(head, arg_sorts, BOOL, minimum=1)
            return BOOL
        if head in ("=", "distinct"):
            if n < 2:
                raise SortMismatch(f"{head} needs at least 2 arguments")
            if any(s != arg_sorts[0] for s in arg_sorts):
                raise SortMismatch(f"{head} relates terms of different sorts: "
                                   + ", ".join(map(str, arg_sorts)))
            return BOOL
        if head == "ite":
            if n != 3 or arg_sorts[0] != BOOL or arg_sorts[1] != arg_sorts[2]:
                raise SortMismatch("ite expects (Bool, S, S)")
            return arg_sorts[1]
        if head in _INT_CMP:
            self._expect_all(head, arg_sorts, INT, minimum=2)
            return BOOL
        if head in _INT_NARY:
            self._expect_all(head, arg_sorts, INT, minimum=1)
            return INT
        if head == "-":
            self._expect_all(head, arg_sorts, INT, minimum=1)
            return INT
        if head in ("div", "mod"):
            self._expect_all(head, arg_sorts, INT, exact=2)
            return INT
        if head == "abs":
            self._expect_all(head, arg_sorts, INT, exact=1)
            return INT
        cons = tester_constructor(head)
        if cons is not None:
            if cons not in self.constructors:
                raise UnknownSymbol(f"unknown constructor {cons} in tester")
            dt = self.datatypes[self.constructors[cons]]
            if n != 1 or arg_sorts[0].name != dt.name:
                raise SortMismatch(f"tester {head} expects one {dt.name} argument")
            return BOOL
        sig = self.funs.get(head)
        if sig is None:
            raise UnknownSymbol(f"unknown function symbol {head}")
        if len(sig.params) != n:
            raise SortMismatch(f"{head} expects {len(sig.params)} arguments, got {n}")
        subst: dict[str, Sort] = {}
        for p, a in zip(sig.params, arg_sorts):
            if not unify(p, a, sig.type_params, subst):
                raise SortMismatch(f"argument of sort {a} does not match {p} in {head}")
        if expected is not None and not unify(sig.ret, expected, sig.type_params, subst):
            raise SortMismatch(f"{head} cannot have sort {expected}")
        ret = sig.ret.substitute(subst)
        if sig.type_params and _sort_names(ret) & set(sig.type_params):
            raise SortMismatch(f"cannot infer the sort of {head}; use (as {head} <sort>)")
        return ret

    @staticmethod
    def _expect_all(head, sorts, want, exact=None, minimum=None):
        if exact is not None and len(sorts) != exact:
            raise SortMismatch(f"{head} expects {exact} argument(s)")
        if minimum is not None and len(sorts) < minimum:
            raise SortMismatch(f"{head} expects at least {minimum} argument(s)")
        for s in sorts:
            if s != want:
                raise SortMismatch(f"{head} expects {want} arguments, got {s}")

    def check_term(self, t: Term, env: dict[str, Sort] | None = None) -> Sort:
        """Re-check a constructed term; returns its sort or raises."""
        env = env or {}
        if isinstance(t, Var):
            if env.get(t.name) != t.sort:
                raise UnknownSymbol(f"variable {t.name} is not bound with sort {t.sort}")
            return t.sort
        if isinstance(t, Const):
            want = BOOL if isinstance(t.value, bool) else INT
            if t.sort != want:
                raise SortMismatch(f"literal {t.value} has sort {want}")
            return t.sort
        if isinstance(t, Quant):
            inner = dict(env)
            for name, s in t.bound:
                self.check_sort(s)
                inner[name] = s
            if self.check_term(t.body, inner) != BOOL:
                raise SortMismatch("quantifier body must be Bool")
            return BOOL
        arg_sorts = [self.check_term(a, env) for a in t.args]
        got = self.apply_sort(t.head, arg_sorts, t.sort if t.ascribed else None)
        if got != t.sort:
            raise SortMismatch(f"{t.head} has sort {got}, recorded as {t.sort}")
        return got

    def check_formula(self, t: Term) -> None:
        """Closed Bool formula over this signature, else IllSortedConjecture."""
        try:
            if not is_closed(t):
                raise UnknownSymbol("free variables: " + ", ".join(sorted(free_vars(t))))
            if self.check_term(t) != BOOL:
                raise SortMismatch("formula is not Bool")
        except SmtlibError as e:
            raise IllSortedConjecture(e.message) from e


def _sort_names(s: Sort) -> set[str]:
    out = {s.name}
    for a in s.args:
        out |= _sort_names(a)
    return out
