"""Command line entry point.

Exit codes (stable):
    0  success: proved / batch completed / certificate valid / conjecture passes
    1  negative result: not proved / a certificate node failed / conjecture filtered
    2  usage, configuration or input error

Settings are merged in this order, later wins: built-in defaults, the TOML
file given by ``--config`` (or ``$INDLEMMA_CONFIG``), environment variables
(``INDLEMMA_MODE``, ``INDLEMMA_TRANSCRIPTS``, ``INDLEMMA_MODEL``,
``INDLEMMA_ENDPOINT``), command-line flags.  API keys are read only from the
environment variable named by ``model.api_key_env``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields, replace
from pathlib import Path

import tomli

from . import __version__
from .bench import load_report, run_bench, summarize, write_report
from .certificate import CertificateError, check_certificate, load_certificate, write_certificate
from .engine import EngineConfig, ProofEngine
from .filtering import is_filtered
from .llm import LLMClient, ModelConfig, TranscriptStore, parse_pool
from .resources import transcripts_dir
from .smtlib import SmtlibError, parse_file, render_term
from .solvers import load_solver_table, select, set_process_limit
from .solvers.config import DEFAULT_BACKEND, DEFAULT_FILTER

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2

ENGINE_KEYS = {"timeout": "task_time_limit", "max_depth": "max_depth",
               "max_iters": "max_iter_number", "initial_timeout": "initial_check_timeout",
               "verify_timeout": "verify_timeout", "filter_timeout": "filter_timeout",
               "subgoal_parallelism": "subgoal_parallelism",
               "conjecture_cap": "conjecture_cap", "filter_mode": "filter_mode",
               "engine_off": "engine_off", "prompts": "prompt_pool"}
ENGINE_KEYS.update({v: v for v in list(ENGINE_KEYS.values())})
MODEL_KEYS = {f.name for f in fields(ModelConfig)}
SECRET_WORDS = ("api_key", "apikey", "secret", "token", "password")
ENV_MODEL = {"INDLEMMA_MODE": "mode", "INDLEMMA_TRANSCRIPTS": "transcripts",
             "INDLEMMA_MODEL": "model", "INDLEMMA_ENDPOINT": "endpoint"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- configuration

def _secret(key: str) -> bool:
    k = key.lower()
    return k != "api_key_env" and any(w in k for w in SECRET_WORDS)


def load_config_file(path) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from e
    except tomli.TOMLDecodeError as e:
        raise UsageError(f"{path}: {e}") from e

    def scan(d, where):
        for k, v in d.items():
            if _secret(k):
                raise UsageError(f"{path}: '{where}{k}' looks like a secret; "
                                 "pass keys through the environment instead")
            if isinstance(v, dict):
                scan(v, f"{where}{k}.")

    scan(data, "")
    return data


def _engine_value(key: str, value):
    if key == "prompt_pool":
        return parse_pool(value) if isinstance(value, str) else tuple(parse_pool(",".join(value)))
    return value


class Settings:
    """Merged configuration for one invocation."""

    def __init__(self, args: argparse.Namespace, env=None):
        env = os.environ if env is None else env
        cfg_path = getattr(args, "config", None) or env.get("INDLEMMA_CONFIG")
        data = load_config_file(cfg_path) if cfg_path else {}

        engine: dict = {}
        for k, v in data.get("engine", {}).items():
            if k not in ENGINE_KEYS:
                raise UsageError(f"unknown [engine] key: {k}")
            engine[ENGINE_KEYS[k]] = _engine_value(ENGINE_KEYS[k], v)
        model: dict = {"transcripts": str(transcripts_dir())}
        for k, v in data.get("model", {}).items():
            if k not in MODEL_KEYS:
                raise UsageError(f"unknown [model] key: {k}")
            model[k] = v
        for var, key in ENV_MODEL.items():
            if env.get(var):
                model[key] = env[var]

        flag_engine = {"timeout": "task_time_limit", "max_depth": "max_depth",
                       "max_iters": "max_iter_number", "initial_timeout": "initial_check_timeout",
                       "verify_timeout": "verify_timeout", "filter_timeout": "filter_timeout",
                       "filter_mode": "filter_mode"}
        for flag, key in flag_engine.items():
            v = getattr(args, flag, None)
            if v is not None:
                engine[key] = v
        if getattr(args, "prompts", None):
            engine["prompt_pool"] = _engine_value("prompt_pool", args.prompts)
        if getattr(args, "engine_off", False):
            engine["engine_off"] = True
        for flag in ("mode", "transcripts", "model", "temperature", "top_p"):
            v = getattr(args, flag, None)
            if v is not None:
                model[flag] = str(v) if flag == "transcripts" else v

        try:
            self.engine = EngineConfig(**engine)
            self.model = ModelConfig(**model)
        except (ValueError, KeyError, TypeError) as e:
            raise UsageError(str(e)) from e

        solver_data = dict(data.get("solvers", {}))
        backend = data.get("backend", {})
        sc = getattr(args, "solver_config", None)
        if sc:
            extra = load_config_file(sc)
            solver_data.update(extra.get("solvers", {}))
            backend = {**backend, **extra.get("backend", {})}
        try:
            table = load_solver_table(solver_data)
            self.backend = select(backend.get("portfolio", DEFAULT_BACKEND), table)
            self.filter = select(backend.get("filter", DEFAULT_FILTER), table)
        except (KeyError, ValueError, TypeError) as e:
            raise UsageError(f"solver configuration: {e}") from e
        self.process_limit = getattr(args, "process_limit", None) or backend.get("process_limit")

    def describe(self) -> dict:
        return {"engine": self.engine.describe(), "model": self.model.redacted(),
                "portfolio": [c.name for c in self.backend],
                "filter": [c.name for c in self.filter],
                "process_limit": self.process_limit}

    def client(self) -> LLMClient | None:
        if self.engine.engine_off:
            return None
        if self.model.mode in ("replay", "record") and not self.model.transcripts:
            raise UsageError(f"--mode {self.model.mode} needs --transcripts DIR")
        if self.model.mode == "replay" and not Path(self.model.transcripts).is_dir():
            raise UsageError(f"transcript directory not found: {self.model.transcripts}")
        return LLMClient(self.model)


# ---------------------------------------------------------------- output helpers

def _short(text: str, width: int = 96) -> str:
    return text if len(text) <= width else text[: width - 3] + "..."


def print_tree(outcome, out=None) -> None:
    out = out or sys.stdout
    for n in outcome.root.walk():
        pad = "  " * n.depth
        tag = " (memo)" if n.memo_hit else ""
        solver = f" via {n.solver}" if n.solver else ""
        print(f"{pad}{n.path} [{n.status}]{solver}{tag} {n.elapsed:.1f}s", file=out)
        print(f"{pad}  goal: {_short(render_term(n.task.goal))}", file=out)


# ---------------------------------------------------------------- commands

def cmd_prove(args, settings: Settings) -> int:
    try:
        task = parse_file(args.file)
    except FileNotFoundError:
        raise UsageError(f"no such file: {args.file}")
    except (SmtlibError, OSError) as e:
        raise UsageError(str(e)) from e
    trace = None
    if args.trace:
        trace = open(args.trace, "w", encoding="utf-8")
    try:
        engine = ProofEngine(settings.engine, settings.client(), settings.backend,
                             settings.filter, trace)
        outcome = engine.prove_task(task)
    finally:
        if trace:
            trace.close()
    word = "proved" if outcome.proved else "not proved"
    print(f"{word}: {args.file} in {outcome.wall_time:.1f}s, {outcome.queries} queries, "
          f"{outcome.usage.total} tokens, tree height {outcome.root.height()}")
    print_tree(outcome)
    if not outcome.proved:
        return EXIT_NEGATIVE
    cert = Path(args.out) if args.out else Path(Path(args.file).stem + ".cert.json")
    write_certificate(outcome, cert)
    print(f"certificate: {cert}")
    return EXIT_OK


def cmd_bench(args, settings: Settings) -> int:
    if not Path(args.source).exists():
        raise UsageError(f"no such directory or task list: {args.source}")
    engine = settings.engine
    if args.task_timeout is not None:
        engine = replace(engine, task_time_limit=args.task_timeout)
    if args.task_parallelism < 1:
        raise UsageError("--task-parallelism must be positive")
    if not engine.engine_off:
        settings.client()  # validates the model settings up front
    report = run_bench(args.source, engine, None if engine.engine_off else settings.model,
                       args.task_parallelism, args.out, args.benchmark, settings.backend,
                       settings.filter)
    paths = write_report(report, args.out)
    sys.stdout.write(summarize(report))
    print(f"report: {paths['json']}")
    return EXIT_OK


def cmd_summary(args, settings) -> int:
    try:
        report = load_report(args.report)
    except ValueError as e:
        raise UsageError(str(e)) from e
    sys.stdout.write(summarize(report))
    return EXIT_OK


def cmd_check(args, settings: Settings) -> int:
    try:
        doc = load_certificate(args.certificate)
    except FileNotFoundError:
        raise UsageError(f"no such file: {args.certificate}")
    except (CertificateError, OSError, UnicodeDecodeError) as e:
        print(f"malformed certificate: {e}", file=sys.stderr)
        return EXIT_USAGE
    report = check_certificate(doc, settings.backend, settings.engine.verify_timeout)
    for path, reason in report.failures:
        print(f"FAILED {path}: {reason}")
    if report.ok:
        print(f"certificate valid ({report.checked} obligations re-checked)")
        return EXIT_OK
    return EXIT_NEGATIVE


def cmd_filter(args, settings: Settings) -> int:
    try:
        task = parse_file(args.file)
    except FileNotFoundError:
        raise UsageError(f"no such file: {args.file}")
    except (SmtlibError, OSError) as e:
        raise UsageError(str(e)) from e
    v = is_filtered(args.conjecture, task, settings.engine.filter_timeout, settings.filter)
    print(v)
    if args.verbose and v.detail:
        print(v.detail, file=sys.stderr)
    return EXIT_OK if str(v) == "Pass" else EXIT_NEGATIVE


def cmd_transcripts(args, settings: Settings) -> int:
    directory = Path(args.transcripts or settings.model.transcripts)
    if not directory.is_dir():
        raise UsageError(f"transcript directory not found: {directory}")
    store = TranscriptStore(directory)
    if args.action == "list":
        for t in store:
            it = t.params.get("iteration", "?")
            print(f"{t.key[:16]}  {t.model}  it={it}  "
                  f"tokens={sum(int(v) for v in t.usage.values())}")
        return EXIT_OK
    if args.action == "show":
        matches = [p for p in directory.glob(f"{args.key}*.json")]
        if len(matches) != 1:
            raise UsageError(f"key prefix {args.key!r} matches {len(matches)} transcripts")
        t = store.load(matches[0].stem)
        print(t.response)
        return EXIT_OK
    bad = 0
    for p in sorted(directory.glob("*.json")):
        try:
            store.load(p.stem)
        except (ValueError, TypeError) as e:
            bad += 1
            print(f"BAD {p.name}: {e}")
    print(f"{len(list(directory.glob('*.json'))) - bad} ok, {bad} bad")
    return EXIT_NEGATIVE if bad else EXIT_OK


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML settings file")
    p.add_argument("--solver-config", help="TOML file with [solvers.<name>] and [backend]")
    p.add_argument("--verbose", "-v", action="store_true")


def _engine_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("engine")
    g.add_argument("--timeout", type=float, help="wall-clock limit per task (s)")
    g.add_argument("--max-depth", type=int)
    g.add_argument("--max-iters", type=int, help="queries per prompt strategy")
    g.add_argument("--prompts", help="comma-separated strategies, e.g. strategy1,strategy2")
    g.add_argument("--engine-off", action="store_true",
                   help="solver portfolio only, no conjectures")
    g.add_argument("--filter-mode", choices=("strict", "drop-bad"))
    g.add_argument("--initial-timeout", type=float)
    g.add_argument("--verify-timeout", type=float)
    g.add_argument("--filter-timeout", type=float)
    g.add_argument("--process-limit", type=int, help="solver processes running at once")
    m = p.add_argument_group("model")
    m.add_argument("--mode", choices=("live", "record", "replay"))
    m.add_argument("--transcripts", help="transcript directory (replay/record)")
    m.add_argument("--model")
    m.add_argument("--temperature", type=float)
    m.add_argument("--top-p", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="indlemma", description="Lemma-guided inductive proving.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prove", help="prove one SMT-LIB task")
    p.add_argument("file")
    p.add_argument("--out", help="certificate path (default: <stem>.cert.json)")
    p.add_argument("--trace", help="write engine events as JSON lines to this file")
    _engine_flags(p)
    _common(p)
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("bench", help="run a benchmark directory or task list")
    p.add_argument("source")
    p.add_argument("--out", default="bench-out")
    p.add_argument("--task-parallelism", type=int, default=1)
    p.add_argument("--task-timeout", type=float)
    p.add_argument("--benchmark", help="group name for every task (default: from paths)")
    _engine_flags(p)
    _common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("summary", help="print the summary table of a stored report.json")
    p.add_argument("report")
    _common(p)
    p.set_defaults(func=cmd_summary)

    p = sub.add_parser("check", help="re-verify a proof certificate")
    p.add_argument("certificate")
    p.add_argument("--verify-timeout", type=float)
    p.add_argument("--process-limit", type=int)
    _common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("filter", help="run the conjecture filter on one formula")
    p.add_argument("file")
    p.add_argument("conjecture")
    p.add_argument("--filter-timeout", type=float)
    _common(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("transcripts", help="inspect a transcript directory")
    p.add_argument("action", choices=("list", "show", "verify"))
    p.add_argument("key", nargs="?")
    p.add_argument("--transcripts")
    _common(p)
    p.set_defaults(func=cmd_transcripts)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "transcripts" and args.action == "show" and not args.key:
            raise UsageError("transcripts show needs a KEY")
        settings = Settings(args)
        if settings.process_limit:
            set_process_limit(int(settings.process_limit))
        if args.verbose:
            print(json.dumps(settings.describe(), indent=2, sort_keys=True), file=sys.stderr)
        return args.func(args, settings)
    except UsageError as e:
        print(f"indlemma: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
