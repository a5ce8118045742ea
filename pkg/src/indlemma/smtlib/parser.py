"""Front end: SMT-LIB2 text -> :class:`Task`.

``match`` and ``let`` are desugared while parsing (testers/selectors and
substitution respectively), and ``!`` annotations are dropped, so the rest
of the package only ever sees the plain term shapes of :mod:`.terms`.
"""

from __future__ import annotations

from .sexp import Atom, SExpError, SList, read_forms, read_one
from .terms import (
    BOOL,
    INT,
    App,
    Const,
    Constructor,
    DatatypeDecl,
    FunctionDef,
    MultipleGoals,
    NoGoalFound,
    Quant,
    Signature,
    SmtlibError,
    Sort,
    SortMismatch,
    Task,
    Term,
    UnknownSymbol,
    Var,
    substitute,
    tester_head,
)

GOAL_LABEL = "proof goal"

_IGNORED = {"set-info", "get-model", "get-value", "get-info", "get-unsat-core",
            "get-proof", "get-assertions", "echo", "exit", "reset-assertions"}


class _NeedsSort(SortMismatch):
    """A nullary parametric constructor whose sort is not yet known."""


def _err(cls, message: str, node) -> SmtlibError:
    return cls(message, getattr(node, "line", 0), getattr(node, "col", 0))


def _sym(node, what: str = "symbol") -> str:
    if not isinstance(node, Atom) or node.kind != "symbol":
        raise _err(SmtlibError, f"expected {what}", node)
    return node.text


def _is_label(comment: str, label: str) -> bool:
    return " ".join(comment.lower().split()) == label


class _Elaborator:
    def __init__(self, sig: Signature):
        self.sig = sig

    # -------------------------------------------------------------- sorts
    def sort(self, node, tvars: tuple[str, ...] = ()) -> Sort:
        if isinstance(node, Atom):
            s = Sort(_sym(node, "sort"))
        else:
            if len(node) < 2:
                raise _err(SmtlibError, "malformed sort", node)
            s = Sort(_sym(node[0], "sort"), tuple(self.sort(a, tvars) for a in node.items[1:]))
        try:
            self.sig.check_sort(s, tvars)
        except SmtlibError as e:
            raise _err(type(e), e.message, node) from None
        return s

    def binders(self, node) -> tuple[tuple[str, Sort], ...]:
        if not isinstance(node, SList):
            raise _err(SmtlibError, "expected a binder list", node)
        out = []
        for b in node:
            if not isinstance(b, SList) or len(b) != 2:
                raise _err(SmtlibError, "expected (name sort)", b)
            out.append((_sym(b[0], "variable name"), self.sort(b[1])))
        return tuple(out)

    # -------------------------------------------------------------- terms
    def term(self, node, env: dict[str, Sort], expected: Sort | None = None) -> Term:
        if isinstance(node, Atom):
            return self._atom(node, env, expected)
        if len(node) == 0:
            raise _err(SmtlibError, "empty application", node)
        head = node[0]
        if isinstance(head, Atom) and head.kind == "symbol" and head.text not in env:
            h = head.text
            if h in ("forall", "exists"):
                if len(node) != 3:
                    raise _err(SmtlibError, f"malformed {h}", node)
                bound = self.binders(node[1])
                inner = dict(env)
                inner.update(bound)
                body = self.term(node[2], inner, BOOL)
                self._expect(body, BOOL, node[2])
                return Quant(h, bound, body) if bound else body
            if h == "let":
                return self._let(node, env, expected)
            if h == "match":
                return self._match(node, env, expected)
            if h == "!":
                return self.term(node[1], env, expected)
            if h == "as":
                name, ascription = self._head(node)
                return self._app(name, [], node, ascription, ascribed=True)
            if h == "-" and len(node) == 2 and isinstance(node[1], Atom) and node[1].kind == "numeral":
                return Const(-int(node[1].text), INT)
        return self._apply(node, env, expected)

    def _atom(self, node: Atom, env, expected) -> Term:
        if node.kind == "numeral":
            return Const(int(node.text), INT)
        if node.kind != "symbol":
            raise _err(SmtlibError, f"unsupported literal {node.text!r}", node)
        name = node.text
        if name in env:
            return Var(name, env[name])
        if name in ("true", "false"):
            return Const(name == "true", BOOL)
        return self._app(name, [], node, expected, ascribed=False)

    def _app(self, head: str, args: list[Term], node, expected, ascribed: bool) -> App:
        try:
            sort = self.sig.apply_sort(head, [a.sort for a in args], expected)
        except SortMismatch as e:
            if "cannot infer" in e.message:
                raise _err(_NeedsSort, e.message, node) from None
            raise _err(type(e), e.message, node) from None
        except SmtlibError as e:
            raise _err(type(e), e.message, node) from None
        if not ascribed:
            ascribed = self.sig.needs_ascription(head)
        return App(head, tuple(args), sort, ascribed)

    def _head(self, node) -> tuple[str, Sort | None]:
        """Function head of an application: plain, tester or (as f S)."""
        if isinstance(node, Atom):
            name = _sym(node, "function symbol")
            if (name.startswith("is-") and name not in self.sig.funs
                    and name[3:] in self.sig.constructors):
                return tester_head(name[3:]), None
            return name, None
        items = node.items
        if len(items) == 3 and isinstance(items[0], Atom) and items[0].text == "_" \
                and isinstance(items[1], Atom) and items[1].text == "is":
            return tester_head(_sym(items[2], "constructor")), None
        if len(items) == 3 and isinstance(items[0], Atom) and items[0].text == "as":
            return _sym(items[1], "function symbol"), self.sort(items[2])
        raise _err(SmtlibError, "unsupported function head", node)

    def _apply(self, node: SList, env, expected) -> Term:
        head_node = node[0]
        if isinstance(head_node, SList) and len(node) == 1:
            head, ascription = self._head(head_node)
            return self._app(head, [], node, ascription or expected, ascribed=ascription is not None)
        head, ascription = self._head(head_node)
        arg_nodes = node.items[1:]
        arg_expect = self._arg_expectations(head, len(arg_nodes))
        args: list[Term | None] = []
        pending = []
        for i, a in enumerate(arg_nodes):
            try:
                args.append(self.term(a, env, arg_expect[i]))
            except _NeedsSort:
                args.append(None)
                pending.append(i)
        if pending:
            known = [(i, t) for i, t in enumerate(args) if t is not None]
            for i in pending:
                want = self._infer_arg_sort(head, i, known, expected)
                if want is None:
                    raise _err(_NeedsSort, "cannot infer sort of argument", arg_nodes[i])
                args[i] = self.term(arg_nodes[i], env, want)
        if head in ("and", "or", "not", "=>", "xor"):
            for a, n in zip(args, arg_nodes):
                self._expect(a, BOOL, n)
        return self._app(head, args, node, ascription or expected, ascribed=ascription is not None)

    def _arg_expectations(self, head: str, n: int) -> list[Sort | None]:
        sig = self.sig.funs.get(head)
        if sig is None or len(sig.params) != n:
            if head in ("and", "or", "not", "=>", "xor"):
                return [BOOL] * n
            if head == "ite" and n == 3:
                return [BOOL, None, None]
            return [None] * n
        out = []
        for p in sig.params:
            names = _names(p)
            out.append(None if names & set(sig.type_params) else p)
        return out

    def _infer_arg_sort(self, head, index, known, expected) -> Sort | None:
        if head in ("=", "distinct"):
            return known[0][1].sort if known else None
        if head == "ite":
            for i, t in known:
                if i > 0:
                    return t.sort
            return expected
        sig = self.sig.funs.get(head)
        if sig is None:
            return None
        from .terms import unify

        subst: dict[str, Sort] = {}
        for i, t in known:
            unify(sig.params[i], t.sort, sig.type_params, subst)
        if expected is not None:
            unify(sig.ret, expected, sig.type_params, subst)
        want = sig.params[index].substitute(subst)
        return None if _names(want) & set(sig.type_params) else want

    def _expect(self, t: Term, want: Sort, node) -> None:
        if t.sort != want:
            raise _err(SortMismatch, f"expected {want}, got {t.sort}", node)

    def _let(self, node: SList, env, expected) -> Term:
        if len(node) != 3 or not isinstance(node[1], SList):
            raise _err(SmtlibError, "malformed let", node)
        values = {}
        for b in node[1]:
            if not isinstance(b, SList) or len(b) != 2:
                raise _err(SmtlibError, "expected (name term)", b)
            values[_sym(b[0])] = self.term(b[1], env)
        inner = dict(env)
        inner.update({k: v.sort for k, v in values.items()})
        body = self.term(node[2], inner, expected)
        return substitute(body, values)

    def _match(self, node: SList, env, expected) -> Term:
        if len(node) != 3 or not isinstance(node[2], SList) or len(node[2]) == 0:
            raise _err(SmtlibError, "malformed match", node)
        scrut = self.term(node[1], env)
        dt = self.sig.datatypes.get(scrut.sort.name)
        if dt is None:
            raise _err(SortMismatch, "match on a non-datatype term", node[1])
        inst = dict(zip(dt.params, scrut.sort.args))
        by_name = {c.name: c for c in dt.constructors}
        branches: list[tuple[Term | None, Term]] = []
        for case in node[2]:
            if not isinstance(case, SList) or len(case) != 2:
                raise _err(SmtlibError, "malformed match case", case)
            pat, rhs = case[0], case[1]
            if isinstance(pat, Atom) and pat.text not in by_name:
                inner = dict(env)
                inner[_sym(pat)] = scrut.sort
                body = self.term(rhs, inner, expected)
                branches.append((None, substitute(body, {pat.text: scrut})))
                break
            if isinstance(pat, Atom):
                cname, names = pat.text, []
            else:
                cname, names = _sym(pat[0], "constructor"), [_sym(v) for v in pat.items[1:]]
            cons = by_name.get(cname)
            if cons is None:
                raise _err(UnknownSymbol, f"{cname} is not a constructor of {dt.name}", pat)
            if len(names) != len(cons.fields):
                raise _err(SortMismatch, f"pattern {cname} expects {len(cons.fields)} fields", pat)
            inner = dict(env)
            mapping = {}
            for v, (sel, fsort) in zip(names, cons.fields):
                fsort = fsort.substitute(inst)
                inner[v] = fsort
                mapping[v] = App(sel, (scrut,), fsort)
            body = self.term(rhs, inner, expected)
            expected = expected or body.sort
            cond = App(tester_head(cname), (scrut,), BOOL)
            branches.append((cond, substitute(body, mapping)))
        result = branches[-1][1]
        for cond, body in reversed(branches[:-1]):
            if body.sort != result.sort:
                raise _err(SortMismatch, "match branches have different sorts", node)
            result = App("ite", (cond, body, result), body.sort)
        return result


def _names(s: Sort) -> set[str]:
    out = {s.name}
    for a in s.args:
        out |= _names(a)
    return out


def _constructor(node, el: _Elaborator, tvars) -> Constructor:
    if isinstance(node, Atom):
        return Constructor(_sym(node, "constructor"))
    name = _sym(node[0], "constructor")
    fields = []
    for f in node.items[1:]:
        if not isinstance(f, SList) or len(f) != 2:
            raise _err(SmtlibError, "expected (selector sort)", f)
        fields.append((_sym(f[0], "selector"), el.sort(f[1], tvars)))
    return Constructor(name, tuple(fields))


def _datatype_body(name: str, node, el: _Elaborator, arity: int) -> DatatypeDecl:
    params: tuple[str, ...] = ()
    if isinstance(node, SList) and len(node) == 3 and isinstance(node[0], Atom) \
            and node[0].text == "par":
        params = tuple(_sym(p) for p in node[1])
        node = node[2]
    if len(params) != arity:
        raise _err(SmtlibError, f"datatype {name} declared with arity {arity}", node)
    if not isinstance(node, SList) or len(node) == 0:
        raise _err(SmtlibError, f"datatype {name} needs constructors", node)
    return DatatypeDecl(name, tuple(_constructor(c, el, params) for c in node), params)


class ScriptParser:
    def __init__(self, source_path: str | None = None):
        self.sig = Signature()
        self.el = _Elaborator(self.sig)
        self.source_path = source_path
        self.logic = None
        self.options: list[tuple[str, str]] = []
        self.sort_decls: list[tuple[str, int]] = []
        self.datatypes: list[tuple[DatatypeDecl, ...]] = []
        self.functions: list[tuple[FunctionDef, ...]] = []
        self.asserts: list[tuple[Term, bool, SList]] = []  # (term, labeled, node)

    def _fresh_symbol(self, name: str, node) -> None:
        if name in self.sig.funs or name in ("true", "false") or name in _RESERVED:
            raise _err(SmtlibError, f"symbol {name} already declared", node)

    def _datatypes(self, node: SList, single: bool) -> None:
        el = self.el
        if single:
            if len(node) != 3:
                raise _err(SmtlibError, "malformed declare-datatype", node)
            heads = [(_sym(node[1], "datatype name"), _par_arity(node[2]))]
            bodies = [node[2]]
            legacy_params: tuple[str, ...] | None = None
        else:
            if len(node) != 3 or not isinstance(node[1], SList) or not isinstance(node[2], SList):
                raise _err(SmtlibError, "malformed declare-datatypes", node)
            if len(node[1]) == 0 or isinstance(node[1][0], Atom):
                # SMT-LIB 2.5: (declare-datatypes (T ...) ((Name cons ...) ...))
                legacy_params = tuple(_sym(p) for p in node[1])
                heads = [(_sym(d[0], "datatype name"), len(legacy_params)) for d in node[2]]
                bodies = [SList(d.items[1:], d.line, d.col) for d in node[2]]
            else:
                legacy_params = None
                heads = []
                for h in node[1]:
                    if not isinstance(h, SList) or len(h) != 2 or getattr(h[1], "kind", "") != "numeral":
                        raise _err(SmtlibError, "expected (name arity)", h)
                    heads.append((_sym(h[0]), int(h[1].text)))
                bodies = list(node[2])
                if len(bodies) != len(heads):
                    raise _err(SmtlibError, "datatype count mismatch", node)
        for name, arity in heads:
            if name in self.sig.sorts:
                raise _err(SmtlibError, f"sort {name} already declared", node)
            self.sig.sorts[name] = arity
        group = []
        for (name, arity), body in zip(heads, bodies):
            if legacy_params:
                decl = DatatypeDecl(
                    name, tuple(_constructor(c, el, legacy_params) for c in body), legacy_params
                )
            else:
                decl = _datatype_body(name, body, el, arity)
            self.sig.sorts[name] = decl.arity
            group.append(decl)
        seen: set[str] = set()
        for d in group:
            for c in d.constructors:
                for sym in [c.name] + [s for s, _ in c.fields]:
                    if sym in seen:
                        raise _err(SmtlibError, f"duplicate constructor/selector {sym}", node)
                    self._fresh_symbol(sym, node)
                    seen.add(sym)
        self.sig.add_datatypes(group)
        self.datatypes.append(tuple(group))

    def _define(self, node: SList, kind: str) -> None:
        if len(node) != 5:
            raise _err(SmtlibError, f"malformed {node[0].text}", node)
        name = _sym(node[1], "function name")
        self._fresh_symbol(name, node[1])
        params = self.el.binders(node[2])
        ret = self.el.sort(node[3])
        f = FunctionDef(name, params, ret, kind)
        if kind == "rec":
            self.sig.add_function(f)
        body = self.el.term(node[4], dict(params), ret)
        self.el._expect(body, ret, node[4])
        f = FunctionDef(name, params, ret, kind, body)
        self.sig.add_function(f)
        self.functions.append((f,))

    def _define_funs_rec(self, node: SList) -> None:
        if len(node) != 3 or len(node[1]) != len(node[2]):
            raise _err(SmtlibError, "malformed define-funs-rec", node)
        heads = []
        for d in node[1]:
            if not isinstance(d, SList) or len(d) != 3:
                raise _err(SmtlibError, "expected (name params sort)", d)
            name = _sym(d[0])
            self._fresh_symbol(name, d)
            f = FunctionDef(name, self.el.binders(d[1]), self.el.sort(d[2]), "rec")
            self.sig.add_function(f)
            heads.append(f)
        group = []
        for f, b in zip(heads, node[2]):
            body = self.el.term(b, dict(f.params), f.ret)
            self.el._expect(body, f.ret, b)
            group.append(FunctionDef(f.name, f.params, f.ret, "rec", body))
        self.functions.append(tuple(group))

    def command(self, form) -> bool:
        """Process one command; returns False at ``exit``."""
        node = form.expr
        if not isinstance(node, SList) or len(node) == 0 or not isinstance(node[0], Atom):
            raise _err(SmtlibError, "expected a command", node)
        cmd = node[0].text
        if cmd == "set-logic":
            self.logic = _sym(node[1], "logic")
        elif cmd == "set-option":
            self.options.append((node[1].text, " ".join(str(x) for x in node.items[2:])))
        elif cmd == "declare-sort":
            name = _sym(node[1], "sort name")
            arity = int(node[2].text) if len(node) > 2 else 0
            if name in self.sig.sorts:
                raise _err(SmtlibError, f"sort {name} already declared", node)
            self.sig.sorts[name] = arity
            self.sort_decls.append((name, arity))
        elif cmd in ("declare-datatype", "declare-datatypes"):
            self._datatypes(node, cmd == "declare-datatype")
        elif cmd in ("declare-fun", "declare-const"):
            name = _sym(node[1], "function name")
            self._fresh_symbol(name, node[1])
            if cmd == "declare-fun":
                if len(node) != 4 or not isinstance(node[2], SList):
                    raise _err(SmtlibError, "malformed declare-fun", node)
                args = tuple((f"x{i}", self.el.sort(s)) for i, s in enumerate(node[2]))
                ret = self.el.sort(node[3])
            else:
                args, ret = (), self.el.sort(node[2])
            f = FunctionDef(name, args, ret, "declare")
            self.sig.add_function(f)
            self.functions.append((f,))
        elif cmd == "define-fun":
            self._define(node, "define")
        elif cmd == "define-fun-rec":
            self._define(node, "rec")
        elif cmd == "define-funs-rec":
            self._define_funs_rec(node)
        elif cmd == "assert":
            if len(node) != 2:
                raise _err(SmtlibError, "malformed assert", node)
            t = self.el.term(node[1], {}, BOOL)
            self.el._expect(t, BOOL, node[1])
            labeled = any(_is_label(c, GOAL_LABEL) for c in form.comments)
            self.asserts.append((t, labeled, node))
        elif cmd == "check-sat":
            pass
        elif cmd == "exit":
            return False
        elif cmd in _IGNORED:
            pass
        else:
            raise _err(SmtlibError, f"unsupported command {cmd}", node)
        return True

    def finish(self) -> Task:
        labeled = [a for a in self.asserts if a[1]]
        if len(labeled) > 1:
            raise _err(MultipleGoals, "more than one labeled proof goal", labeled[1][2])
        if labeled:
            goal_entry = labeled[0]
            goal = goal_entry[0]
        else:
            if not self.asserts:
                raise NoGoalFound("no assert found")
            goal_entry = self.asserts[-1]
            t = goal_entry[0]
            if not (isinstance(t, App) and t.head == "not"):
                raise _err(NoGoalFound, "final assert is not a negated goal", goal_entry[2])
            goal = t.args[0]
        axioms = tuple(a[0] for a in self.asserts if a is not goal_entry)
        return Task(
            datatypes=tuple(self.datatypes),
            functions=tuple(self.functions),
            axioms=axioms,
            goal=goal,
            sort_decls=tuple(self.sort_decls),
            logic=self.logic,
            options=tuple(self.options),
            source_path=self.source_path,
        )


_RESERVED = {"forall", "exists", "let", "match", "!", "_", "as", "par"}


def _par_arity(body) -> int:
    if isinstance(body, SList) and len(body) == 3 and isinstance(body[0], Atom) \
            and body[0].text == "par":
        return len(body[1])
    return 0


def parse_script(text: str, source_path: str | None = None) -> Task:
    """Parse an SMT-LIB2 script into a sort-checked :class:`Task`."""
    try:
        forms = read_forms(text)
    except SExpError as e:
        raise SmtlibError(str(e).split(": ", 1)[-1], e.line, e.col) from None
    p = ScriptParser(source_path)
    for form in forms:
        if not p.command(form):
            break
    return p.finish()


def parse_file(path) -> Task:
    with open(path, encoding="utf-8") as fh:
        return parse_script(fh.read(), str(path))


def parse_term(text: str, sig: Signature, expected: Sort | None = None) -> Term:
    try:
        node = read_one(text)
    except SExpError as e:
        raise SmtlibError(str(e).split(": ", 1)[-1], e.line, e.col) from None
    return _Elaborator(sig).term(node, {}, expected)


def parse_formula(text: str, task_or_sig) -> Term:
    """Parse a closed Bool formula, stripping an outer ``(assert ...)``."""
    sig = task_or_sig if isinstance(task_or_sig, Signature) else task_or_sig.signature()
    try:
        node = read_one(text)
    except SExpError as e:
        raise SmtlibError(str(e).split(": ", 1)[-1], e.line, e.col) from None
    if isinstance(node, SList) and len(node) == 2 and isinstance(node[0], Atom) \
            and node[0].text == "assert":
        node = node[1]
    el = _Elaborator(sig)
    t = el.term(node, {}, BOOL)
    el._expect(t, BOOL, node)
    return t
