"""Pull candidate formulas out of a free-text model response."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..smtlib import SmtlibError, Task, Term, alpha_normalize, parse_formula, render_term
from ..smtlib.sexp import find_balanced

DEFAULT_CAP = 3

_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.S)
_START = re.compile(r"\((?:forall|assert)\b")
# commands a model may echo back from the input file; never conjectures
_ECHOED = re.compile(r"\(\s*(?:declare-|define-|set-|check-sat|get-|exit)")


@dataclass(frozen=True)
class Provenance:
    strategy: str
    iteration: int
    depth: int
    model: str


@dataclass(frozen=True)
class Conjecture:
    formula: Term
    raw_text: str
    provenance: Provenance | None = None
    tokens: tuple[int, int] = (0, 0)

    @property
    def smt2(self) -> str:
        return render_term(self.formula)


@dataclass(frozen=True)
class Diagnostic:
    text: str
    reason: str


def _top_level_forms(text: str) -> list[str]:
    out = []
    i = 0
    while True:
        i = text.find("(", i)
        if i < 0:
            return out
        end = find_balanced(text, i)
        if end < 0:
            out.append(text[i:])
            return out
        out.append(text[i:end])
        i = end


def candidate_texts(raw: str) -> list[str]:
    """Fenced-block forms first, then inline ``(forall``/``(assert`` forms."""
    found: list[str] = []
    for block in _FENCE.findall(raw):
        found += [f for f in _top_level_forms(block) if not _ECHOED.match(f)]
    rest = _FENCE.sub("\n", raw)
    i = 0
    while True:
        m = _START.search(rest, i)
        if m is None:
            break
        end = find_balanced(rest, m.start())
        if end < 0:
            found.append(rest[m.start():].split("\n", 1)[0])
            i = m.end()
            continue
        found.append(rest[m.start():end])
        i = end
    return found


def extract_conjectures(raw: str, task: Task, cap: int = DEFAULT_CAP,
                        provenance: Provenance | None = None,
                        tokens: tuple[int, int] = (0, 0),
                        diagnostics: list | None = None) -> list[Conjecture]:
    """Well-sorted, closed, alpha-distinct conjectures in order of appearance.

    Candidates that fail to parse or sort-check, duplicates, restated
    axioms and anything past ``cap`` are reported through ``diagnostics``.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    diags = diagnostics if diagnostics is not None else []
    sig = task.signature()
    axioms = {alpha_normalize(a) for a in task.axioms}
    seen: set = set()
    out: list[Conjecture] = []
    for text in candidate_texts(raw):
        one_line = " ".join(text.split())
        try:
            f = parse_formula(text, sig)
            sig.check_formula(f)
        except SmtlibError as e:
            diags.append(Diagnostic(one_line, f"rejected: {e}"))
            continue
        norm = alpha_normalize(f)
        if norm in seen:
            diags.append(Diagnostic(one_line, "duplicate"))
            continue
        if norm in axioms:
            diags.append(Diagnostic(one_line, "restates an axiom"))
            continue
        seen.add(norm)
        if len(out) >= cap:
            diags.append(Diagnostic(one_line, f"over the cap of {cap}"))
            continue
        out.append(Conjecture(f, one_line, provenance, tokens))
    return out
