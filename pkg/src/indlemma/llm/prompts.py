"""Prompt strategies and their fixed templates.

Template text is kept byte-for-byte (including trailing blanks) because
recorded transcripts are keyed on the rendered prompt.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

PLACEHOLDER = "{ Input SMTLIB2 file }"

STRATEGY1_TEMPLATE = (
    "[Task Description]\n"
    "\n"
    "You are an expert in constraint solving, inductive reasoning, and functional program verification. \n"
    "You are good at extracting information from SMTLIB2 files, reasoning about them, and generating necessary conjectures as auxiliary lemmas to help SMT solvers complete automatic proofs.\n"
    "- Input format:\n"
    "The input is an SMTLIB2 file. It contains: datatypes, function definitions, and the proof goal, each marked with \";\" comments.\n"
    "  \n"
    "[Chain-of-Thought]\n"
    "\n"
    "Please generate auxiliary lemmas using inductive equational reasoning step by step:\n"
    "1) Identify the proof goal and list relevant axioms.\n"
    "2) Assume the SMT solver already knows the induction scheme; you need to generate auxiliary lemmas to help the inductive reasoning.\n"
    "3) Inductive proof setup:\n"
    "   - Determine whether the base case requires auxiliary lemmas.\n"
    "   - Derive the inductive case using equational reasoning.\n"
    "4) Equational reasoning:\n"
    "   - Transform the left-hand side of the property step by step, annotating axiom/hypothesis usage.\n"
    "   - When a step cannot be derived, generate it as a conjecture, annotated as \"unknown conjecture\", which will be checked by SMT solvers to ensure it is an auxiliary lemma.\n"
    "\n"
    "[Output Format]\n"
    "\n"
    "- Please output all the \"unknown conjectures\" you discover through equational reasoning, but do not generate too many conjectures (at most 3 is recommended).\n"
    "- Do not generate conjectures that are identical to the original property.\n"
    "- Output each \"unknown conjecture\" in SMTLIB2 format on a single line.\n"
    "\n"
    "[Input file]\n"
    "\n"
    "{ Input SMTLIB2 file }"
)

STRATEGY2_TEMPLATE = (
    "[Task Description]\n"
    "\n"
    "You are an expert in constraint solving, inductive reasoning, and functional program verification. \n"
    "You are good at extracting information from SMTLIB2 files, reasoning about them, and generating necessary conjectures as auxiliary lemmas to help SMT solvers complete automatic proofs.\n"
    "- Input format:\n"
    "The input is an SMTLIB2 file. It contains: datatypes, function definitions, and the proof goal, each marked with \";\" comments.\n"
    "  \n"
    "[Chain-of-Thought]\n"
    "\n"
    "Please generate auxiliary lemmas using the following ideas:\n"
    "1) Generate basic axioms to help the SMT solver simplify the proof goal.\n"
    "2) Strengthen the proof goal, e.g., to prove the proof goal P under axioms A, find a stronger conclusion Q, such that A => Q and Q => P hold, and both are easier to prove than A => P.\n"
    "3) Based on term rewriting to simplify the proof goal:\n"
    "   - Try to find the pattern term of the proof goal, and rewrite it to a simpler form.\n"
    "   - If no common term exists, try to rewrite terms in the proof goal using axioms to have a common term.\n"
    "   - If you think the auxiliary lemma derived from the term rewriting is not sufficient, generate a new auxiliary lemma that bridges it to the proof goal. \n"
    "4) Identify the conjectures from the above chain of thought, annotated as \"unknown conjectures\", which will be checked by SMT solvers to ensure they are auxiliary lemmas.\n"
    "  \n"
    "[Output Format]\n"
    "\n"
    "- Please output all the \"unknown conjectures\" you discovered through reasoning, but do not generate too many conjectures (at most 3 is recommended).\n"
    "- Do not generate conjectures that are identical to the proof goal.\n"
    "- Output each \"unknown conjecture\" in SMTLIB2 format on a single line.\n"
    "\n"
    "[Input file]\n"
    "\n"
    "{ Input SMTLIB2 file }"
)

NAIVE_TEMPLATE = (
    "You are an expert in constraint solving, inductive reasoning, and functional program verification. \n"
    "Please generate auxiliary lemmas in SMTLIB2 format to add to the following file, which can help the solver verify the property.\n"
    "\n"
    "  { Input SMTLIB2 file }"
)


class StrategyId(str, enum.Enum):
    STRATEGY1 = "strategy1"
    STRATEGY2 = "strategy2"
    NAIVE = "naive"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class PromptStrategy:
    id: StrategyId
    template: str

    def __post_init__(self):
        if self.template.count(PLACEHOLDER) != 1:
            raise ValueError("template must contain the input placeholder exactly once")

    def sections(self) -> dict[str, str]:
        """Bracketed sections of the template (empty for the naive prompt)."""
        out: dict[str, str] = {}
        current = None
        for line in self.template.split("\n"):
            if line.startswith("[") and line.rstrip().endswith("]"):
                current = line.strip()[1:-1]
                out[current] = ""
            elif current is not None:
                out[current] += line + "\n"
        return {k: v.strip("\n") for k, v in out.items()}


STRATEGY1 = PromptStrategy(StrategyId.STRATEGY1, STRATEGY1_TEMPLATE)
STRATEGY2 = PromptStrategy(StrategyId.STRATEGY2, STRATEGY2_TEMPLATE)
NAIVE = PromptStrategy(StrategyId.NAIVE, NAIVE_TEMPLATE)

STRATEGIES = {s.id.value: s for s in (STRATEGY1, STRATEGY2, NAIVE)}
DEFAULT_POOL = (STRATEGY1, STRATEGY2)


def strategy(name: str) -> PromptStrategy:
    try:
        return STRATEGIES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown prompt strategy {name!r}; choose from {sorted(STRATEGIES)}") from None


def parse_pool(spec: str) -> tuple[PromptStrategy, ...]:
    """``"strategy1,strategy2"`` -> strategies in the given order."""
    names = [n for n in spec.split(",") if n.strip()]
    if not names:
        raise ValueError("empty prompt pool")
    return tuple(strategy(n) for n in names)


def render_prompt(strategy: PromptStrategy, labeled) -> str:
    """Substitute the labeled script (or plain text) at the input placeholder."""
    text = getattr(labeled, "full_text", labeled)
    return strategy.template.replace(PLACEHOLDER, text.rstrip("\n"))
