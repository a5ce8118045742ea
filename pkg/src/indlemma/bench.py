"""Batch runs over benchmark directories.

:func:`run_bench` proves every ``.smt2`` file of a directory (or of a task
list file), writes one certificate per proved task and returns a
:class:`RunReport`.  :func:`write_report` persists it as ``report.json``,
``report.csv`` and ``summary.txt``; :func:`summarize` renders the summary
table with one row per benchmark group.

CSV columns are frozen (see :data:`CSV_COLUMNS`) so that runs can be diffed
across solver and model versions.  Columns listed in
:data:`TIMING_COLUMNS` vary from run to run; all others are determined by
the task, the configuration and the transcripts.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .certificate import write_certificate
from .engine import EngineConfig, ProofEngine
from .llm import LLMClient, ModelConfig
from .smtlib import SmtlibError, parse_file
from .solvers import SpawnFailure, select, solver_version
from .solvers.config import DEFAULT_BACKEND

log = logging.getLogger(__name__)

THRESHOLDS = (1200, 360)
KNOWN_BENCHMARKS = ("StandardDT", "StandardDTLIA", "AutoProofBM", "IndBen")

CSV_COLUMNS = (
    "task",
    "benchmark",
    "outcome",
    "status",
    "solved_under_1200s",
    "solved_under_360s",
    "depth",
    "nodes",
    "attempts",
    "queries",
    "prompt_tokens",
    "completion_tokens",
    "certificate",
    "error",
    "wall_seconds",
)
TIMING_COLUMNS = ("wall_seconds",)

PROVED, NOT_PROVED, ERROR = "Proved", "NotProved", "Error"


class ReportError(ValueError):
    """A stored report is malformed or its summary disagrees with its records."""


@dataclass
class TaskRecord:
    task: str
    benchmark: str
    outcome: str
    wall_seconds: float = 0.0
    status: str = ""
    solved_under_1200s: bool = False
    solved_under_360s: bool = False
    depth: int = 0
    nodes: int = 0
    attempts: int = 0
    queries: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    certificate: str = ""
    error: str = ""

    @property
    def tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def row(self) -> dict:
        d = asdict(self)
        d["wall_seconds"] = f"{self.wall_seconds:.3f}"
        for k in ("solved_under_1200s", "solved_under_360s"):
            d[k] = int(d[k])
        return {k: d[k] for k in CSV_COLUMNS}


@dataclass
class RunReport:
    records: list[TaskRecord] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"metadata": self.metadata, "summary": self.summary,
                "records": [asdict(r) for r in self.records]}


# ---------------------------------------------------------------- aggregation

def _solved(r: TaskRecord, limit: int) -> bool:
    return r.solved_under_1200s if limit == 1200 else r.solved_under_360s


def _group(records) -> dict:
    out = {"total": len(records)}
    for limit in THRESHOLDS:
        hits = [r.wall_seconds for r in records if _solved(r, limit)]
        out[f"solved_{limit}"] = len(hits)
        # averages cover solved tasks only
        out[f"avg_time_{limit}"] = round(sum(hits) / len(hits), 3) if hits else None
    out["tokens"] = sum(r.tokens for r in records)
    out["errors"] = sum(r.outcome == ERROR for r in records)
    return out


def aggregate(records) -> dict:
    groups: dict[str, list] = {}
    for r in records:
        groups.setdefault(r.benchmark, []).append(r)
    summary = {"benchmarks": {b: _group(rs) for b, rs in sorted(groups.items())}}
    summary["total"] = _group(list(records))
    return summary


def check_invariants(report: RunReport) -> None:
    for r in report.records:
        if r.solved_under_360s and not r.solved_under_1200s:
            raise ReportError(f"{r.task}: solved under 360s but not under 1200s")
    if aggregate(report.records) != report.summary:
        raise ReportError("stored summary does not match its records")


# ---------------------------------------------------------------- rendering

def _fmt_avg(v) -> str:
    return "-" if v is None else f"{v:.2f}"


def summarize(report: RunReport) -> str:
    """Plain-text table: one row per benchmark, then Total, Avg time and Tokens (M)."""
    s = report.summary or aggregate(report.records)
    rows = [("Benchmark", "Total", "<1200s", "<360s")]
    for name, g in s["benchmarks"].items():
        rows.append((name, str(g["total"]), str(g["solved_1200"]), str(g["solved_360"])))
    t = s["total"]
    rows.append(("Total", str(t["total"]), str(t["solved_1200"]), str(t["solved_360"])))
    rows.append(("Avg time (s)", "", _fmt_avg(t["avg_time_1200"]), _fmt_avg(t["avg_time_360"])))
    rows.append(("Tokens (M)", "", f"{t['tokens'] / 1e6:.2f}", ""))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]

    def line(r):
        return " | ".join(c.ljust(w) if i == 0 else c.rjust(w)
                          for i, (c, w) in enumerate(zip(r, widths))).rstrip()

    rule = "-+-".join("-" * w for w in widths)
    body = [line(rows[0]), rule] + [line(r) for r in rows[1:-3]] + [rule]
    body += [line(r) for r in rows[-3:]]
    return "\n".join(body) + "\n"


def report_csv(report: RunReport, include_timing: bool = True) -> str:
    cols = [c for c in CSV_COLUMNS if include_timing or c not in TIMING_COLUMNS]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in report.records:
        w.writerow(r.row())
    return buf.getvalue()


# ---------------------------------------------------------------- persistence

def write_report(report: RunReport, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"json": out / "report.json", "csv": out / "report.csv",
             "summary": out / "summary.txt"}
    paths["json"].write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    paths["csv"].write_text(report_csv(report))
    paths["summary"].write_text(summarize(report))
    return paths


def load_report(path) -> RunReport:
    """Read ``report.json``; the summary is recomputed and must match."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        records = [TaskRecord(**r) for r in data["records"]]
        report = RunReport(records, data["summary"], data.get("metadata", {}))
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ReportError(f"{path}: {e}") from e
    check_invariants(report)
    return report


# ---------------------------------------------------------------- task discovery

def infer_benchmark(path: Path, root: Path) -> str:
    """Group name from the directory names between ``root`` and the task."""
    try:
        rel = path.relative_to(root).parts
    except ValueError:
        rel = path.parts[-2:]
    parts = [p.lower() for p in rel[:-1]] + [root.name.lower()]
    for known in sorted(KNOWN_BENCHMARKS, key=len, reverse=True):
        if any(p.startswith(known.lower()) for p in parts):
            return known
    return rel[0] if len(rel) > 1 else root.name


def discover(source) -> tuple[Path, list[Path]]:
    """Task files of a directory (recursive) or of a task list file.

    A task list holds one path per line, relative to the list's directory;
    blank lines and ``#`` comments are ignored.
    """
    src = Path(source)
    if src.is_dir():
        return src, sorted(p for p in src.rglob("*.smt2") if p.is_file())
    if src.is_file():
        base = src.parent
        tasks = []
        for raw in src.read_text(encoding="utf-8").splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                tasks.append((base / line).resolve())
        return base.resolve(), tasks
    raise FileNotFoundError(source)


# ---------------------------------------------------------------- running

def _rel(path: Path, root: Path) -> str:
    try:
        return path.relative_to(root).as_posix()
    except ValueError:
        return path.as_posix()


def _cert_name(rel: str) -> str:
    return rel[:-5].replace("/", "__") + ".json" if rel.endswith(".smt2") else rel + ".json"


def run_one(path: Path, root: Path, cfg: EngineConfig, model: ModelConfig | None,
            out_dir: Path | None, benchmark: str | None = None, backend=None,
            filter_configs=None) -> TaskRecord:
    rel = _rel(path, root)
    rec = TaskRecord(rel, benchmark or infer_benchmark(path, root), ERROR)
    start = time.monotonic()
    try:
        task = parse_file(path)
        client = None if cfg.engine_off or model is None else LLMClient(model)
        engine = ProofEngine(cfg, client, backend, filter_configs)
        outcome = engine.prove_task(task)
    except (SmtlibError, OSError, SpawnFailure, ValueError) as e:
        rec.error = f"{type(e).__name__}: {e}".splitlines()[0][:300]
        rec.wall_seconds = time.monotonic() - start
        return rec
    rec.wall_seconds = outcome.wall_time
    rec.status = str(outcome.root.status)
    rec.outcome = PROVED if outcome.proved else NOT_PROVED
    rec.solved_under_1200s = outcome.proved and outcome.wall_time < 1200
    rec.solved_under_360s = outcome.proved and outcome.wall_time < 360
    rec.depth = outcome.root.height()
    rec.nodes = sum(1 for _ in outcome.root.walk())
    rec.attempts = outcome.attempts
    rec.queries = outcome.queries
    rec.prompt_tokens = outcome.usage.prompt_tokens
    rec.completion_tokens = outcome.usage.completion_tokens
    if outcome.proved and out_dir is not None:
        cert = Path("certificates") / _cert_name(rel)
        (out_dir / cert).parent.mkdir(parents=True, exist_ok=True)
        write_certificate(outcome, out_dir / cert)
        rec.certificate = cert.as_posix()
    return rec


def _versions(configs) -> dict:
    out = {}
    for c in configs:
        try:
            out[c.name] = solver_version(c)
        except (SpawnFailure, OSError) as e:
            out[c.name] = f"unavailable: {e}"
    return out


def run_bench(source, cfg: EngineConfig | None = None, model: ModelConfig | None = None,
              task_parallelism: int = 1, out_dir=None, benchmark: str | None = None,
              backend=None, filter_configs=None) -> RunReport:
    """Prove every task under ``source``; per-task errors become ``Error`` records.

    ``task_parallelism`` above 1 overlaps tasks, which makes the recorded
    times unreliable; the metadata says so.
    """
    if task_parallelism < 1:
        raise ValueError("task_parallelism must be positive")
    cfg = cfg or EngineConfig()
    root, tasks = discover(source)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    backend = list(backend) if backend else select(DEFAULT_BACKEND)
    started = datetime.now(timezone.utc)

    def job(p):
        rec = run_one(p, root, cfg, model, out, benchmark, backend, filter_configs)
        log.info("%s: %s (%.1fs)", rec.task, rec.outcome, rec.wall_seconds)
        return rec

    if task_parallelism == 1:
        records = [job(p) for p in tasks]
    else:
        with ThreadPoolExecutor(max_workers=task_parallelism) as pool:
            records = list(pool.map(job, tasks))
    records.sort(key=lambda r: r.task)

    meta = {
        "timestamp": started.isoformat(timespec="seconds"),
        "source": str(Path(source)),
        "mode": "engine-off" if cfg.engine_off else (model.mode if model else "none"),
        "engine": cfg.describe(),
        "model": model.redacted() if model else None,
        "solvers": _versions(backend),
        "task_parallelism": task_parallelism,
        "timing_reliable": task_parallelism == 1,
        "host_cpus": os.cpu_count(),
    }
    return RunReport(records, aggregate(records), meta)
