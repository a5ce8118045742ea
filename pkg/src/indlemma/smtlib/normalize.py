"""Alpha-normal forms for formulas and tasks."""

from __future__ import annotations

from dataclasses import replace

from .terms import App, Const, FunctionDef, Quant, Task, Term, Var


def alpha_normalize(t: Term) -> Term:
    """Rename bound variables to ``x!0, x!1, ...`` in binder preorder.

    Directly nested quantifiers of the same kind are merged first, so
    ``(forall ((a S)) (forall ((b S)) p))`` and ``(forall ((a S) (b S)) p)``
    share a normal form.
    """
    counter = [0]
    return _norm(t, {}, counter)


def _norm(t: Term, env: dict[str, str], counter: list[int]) -> Term:
    if isinstance(t, Var):
        name = env.get(t.name)
        return t if name is None else Var(name, t.sort)
    if isinstance(t, Const):
        return t
    if isinstance(t, App):
        return App(t.head, tuple(_norm(a, env, counter) for a in t.args), t.sort, t.ascribed)
    bound = list(t.bound)
    body = t.body
    while isinstance(body, Quant) and body.kind == t.kind:
        bound.extend(body.bound)
        body = body.body
    inner = dict(env)
    new_bound = []
    for name, sort in bound:
        fresh = f"x!{counter[0]}"
        counter[0] += 1
        inner[name] = fresh
        new_bound.append((fresh, sort))
    return Quant(t.kind, tuple(new_bound), _norm(body, inner, counter))


def alpha_equal(a: Term, b: Term) -> bool:
    return alpha_normalize(a) == alpha_normalize(b)


def _norm_function(f: FunctionDef) -> FunctionDef:
    if f.body is None:
        params = tuple((f"a!{i}", s) for i, (_, s) in enumerate(f.params))
        return replace(f, params=params)
    env = {n: f"a!{i}" for i, (n, _) in enumerate(f.params)}
    params = tuple((env[n], s) for n, s in f.params)
    return replace(f, params=params, body=_norm(f.body, env, [0]))


def canonical_task(task: Task) -> Task:
    """Task with every binder renamed canonically; compare with ``==``."""
    return replace(
        task,
        functions=tuple(tuple(_norm_function(f) for f in g) for g in task.functions),
        axioms=tuple(alpha_normalize(a) for a in task.axioms),
        goal=alpha_normalize(task.goal),
    )


def tasks_alpha_equal(a: Task, b: Task) -> bool:
    return canonical_task(a) == canonical_task(b)
