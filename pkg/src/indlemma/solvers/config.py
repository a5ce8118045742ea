"""Solver configurations: built-in presets, TOML overrides, executable lookup."""

from __future__ import annotations

import importlib.util
import os
import shutil
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import tomli

# exact status lines understood by every built-in preset
SMTLIB_VERDICTS: tuple[tuple[str, str], ...] = (
    ("unsat", "Unsat"),
    ("sat", "Sat"),
    ("unknown", "Unknown"),
)

ENV_OVERRIDES = {
    "cvc5": "INDLEMMA_CVC5",
    "cvc4": "INDLEMMA_CVC4",
    "vampire": "INDLEMMA_VAMPIRE",
}

_TIMEOUT_FLAGS = ("--tlimit", "--rlimit", "-t", "--time_limit", "--tlimit-per")


class SpawnFailure(RuntimeError):
    """The solver executable could not be found or started."""


@dataclass(frozen=True)
class SolverConfig:
    name: str
    executable: str
    args: tuple[str, ...] = ()
    dialect: str = "smtlib2"  # smtlib2 | smtlib2-vampire
    stdin: bool = False
    verdicts: tuple[tuple[str, str], ...] = SMTLIB_VERDICTS
    family: str = field(default="", compare=False)

    def __post_init__(self):
        for a in self.args:
            if a.split("=", 1)[0] in _TIMEOUT_FLAGS:
                raise ValueError(f"{self.name}: timeouts are enforced externally, drop {a}")

    def command(self) -> list[str]:
        """Argument vector without the input path."""
        return resolve_executable(self) + list(self.args)


PRESETS: dict[str, SolverConfig] = {
    c.name: c
    for c in (
        SolverConfig("cvc5-fsq", "cvc5", ("--full-saturate-quant",), family="cvc5"),
        SolverConfig(
            "cvc5-ind", "cvc5",
            ("--full-saturate-quant", "--quant-ind", "--conjecture-gen"), family="cvc5",
        ),
        SolverConfig(
            "cvc5-ind-noem", "cvc5",
            ("--full-saturate-quant", "--quant-ind", "--conjecture-gen", "--no-e-matching"),
            family="cvc5",
        ),
        SolverConfig(
            "cvc4-ind", "cvc4",
            ("--quant-ind", "--quant-cf", "--conjecture-gen", "--full-saturate-quant",
             "--lang=smt2.6"),
            family="cvc4",
        ),
        SolverConfig(
            "vampire", "vampire",
            ("--input_syntax", "smtlib2", "--mode", "portfolio", "--output_mode", "smtcomp"),
            dialect="smtlib2-vampire", family="vampire",
        ),
    )
}

DEFAULT_BACKEND = ("cvc5-fsq", "cvc5-ind", "cvc5-ind-noem", "cvc4-ind")
DEFAULT_FILTER = ("cvc5-fsq",)


def _bundled_cvc5() -> list[str] | None:
    if importlib.util.find_spec("cvc5") is None:
        return None
    return [sys.executable, "-m", "indlemma.solvers.cvc5_driver"]


def resolve_executable(config: SolverConfig) -> list[str]:
    """Environment override, then an explicit path or PATH lookup.

    When no ``cvc5`` binary exists but the cvc5 Python bindings do, cvc5
    presets run through a small driver in a child interpreter so they can
    still be killed at the deadline.
    """
    env = ENV_OVERRIDES.get(config.family)
    if env and os.environ.get(env):
        exe = os.environ[env]
        found = shutil.which(exe)
        if found is None:
            raise SpawnFailure(f"{env}={exe} is not executable")
        return [found]
    found = shutil.which(config.executable)
    if found:
        return [found]
    if config.family == "cvc5" and config.executable == "cvc5":
        drv = _bundled_cvc5()
        if drv:
            return drv
    raise SpawnFailure(f"{config.name}: executable {config.executable!r} not found")


def available(config: SolverConfig) -> bool:
    try:
        resolve_executable(config)
        return True
    except SpawnFailure:
        return False


def _from_table(name: str, table: dict, base: SolverConfig | None) -> SolverConfig:
    known = {"executable", "args", "dialect", "stdin", "family"}
    extra = set(table) - known
    if extra:
        raise ValueError(f"solver {name}: unknown keys {sorted(extra)}")
    if base is None:
        if "executable" not in table:
            raise ValueError(f"solver {name}: executable is required")
        fam = table.get("family", Path(table["executable"]).name)
        base = SolverConfig(name, table["executable"], family=fam)
    changes = {}
    if "executable" in table:
        changes["executable"] = str(table["executable"])
    if "args" in table:
        changes["args"] = tuple(str(a) for a in table["args"])
    for key in ("dialect", "stdin", "family"):
        if key in table:
            changes[key] = table[key]
    return replace(base, name=name, **changes)


def load_solver_table(data: dict) -> dict[str, SolverConfig]:
    """Presets updated by a ``[solvers.<name>]`` mapping."""
    out = dict(PRESETS)
    for name, table in (data or {}).items():
        out[name] = _from_table(name, table, out.get(name))
    return out


def load_solver_file(path) -> dict[str, SolverConfig]:
    with open(path, "rb") as fh:
        data = tomli.load(fh)
    return load_solver_table(data.get("solvers", {}))


def select(names, table: dict[str, SolverConfig] | None = None) -> list[SolverConfig]:
    table = table or PRESETS
    missing = [n for n in names if n not in table]
    if missing:
        raise KeyError(f"unknown solver configuration(s): {', '.join(missing)}")
    return [table[n] for n in names]
