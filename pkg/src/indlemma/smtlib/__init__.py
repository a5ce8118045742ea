"""SMT-LIB2 fragment: terms, parser, printer and solver obligations."""

from .normalize import alpha_equal, alpha_normalize, canonical_task, tasks_alpha_equal
from .obligations import (
    LabeledScript,
    build_consistency_obligation,
    build_proof_obligation,
    build_subgoal_task,
    preprocess_label,
)
from .parser import parse_file, parse_formula, parse_script, parse_term
from .printer import render_script, render_sort, render_term
from .terms import (
    BOOL,
    INT,
    App,
    Const,
    Constructor,
    DatatypeDecl,
    FunctionDef,
    IllSortedConjecture,
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
)

__all__ = [
    "App", "BOOL", "Const", "Constructor", "DatatypeDecl", "FunctionDef", "INT",
    "IllSortedConjecture", "LabeledScript", "MultipleGoals", "NoGoalFound", "Quant",
    "Signature", "SmtlibError", "Sort", "SortMismatch", "Task", "Term", "UnknownSymbol",
    "Var", "alpha_equal", "alpha_normalize", "build_consistency_obligation",
    "build_proof_obligation", "build_subgoal_task", "canonical_task", "parse_file",
    "parse_formula", "parse_script", "parse_term", "preprocess_label", "render_script",
    "render_sort", "render_term", "tasks_alpha_equal",
]
