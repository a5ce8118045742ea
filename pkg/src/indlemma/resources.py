"""Locations of the data shipped with the package."""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path


def data_dir() -> Path:
    return Path(str(files("indlemma") / "data"))


def suite_dir() -> Path:
    """Five-task mini-suite used by the demos and the acceptance tests."""
    return data_dir() / "suite"


def transcripts_dir() -> Path:
    """Recorded model responses for the mini-suite (replay mode)."""
    return data_dir() / "transcripts"


def running_example() -> Path:
    """Commutativity of multiplication over Peano naturals."""
    return suite_dir() / "nat_mult_comm.smt2"
