"""Minimal cvc5 command line on top of the cvc5 Python bindings.

Used when the ``cvc5`` binary is not installed.  Accepts the same option
spellings as the binary (``--opt``, ``--no-opt``, ``--opt=value``) followed
by one input path, or ``-`` for standard input.
"""

from __future__ import annotations

import ctypes
import ctypes.util
import os
import signal
import sys
import tempfile


def _option(arg: str) -> tuple[str, str]:
    a = arg.lstrip("-")
    if "=" in a:
        return tuple(a.split("=", 1))  # type: ignore[return-value]
    if a.startswith("no-"):
        return a[3:], "false"
    return a, "true"


def _exit_with_parent() -> None:
    """Die with the parent process.

    The runner starts solvers in their own session so it can kill helper
    processes as a group; without this a killed parent would leave the solve
    running.  The solver holds the GIL while it works, so a watchdog thread
    is no use; the kernel delivers the signal instead (Linux only).
    """
    parent = os.getppid()
    if sys.platform.startswith("linux"):
        libc = ctypes.CDLL(ctypes.util.find_library("c") or "libc.so.6", use_errno=True)
        libc.prctl(1, int(signal.SIGKILL), 0, 0, 0)  # PR_SET_PDEATHSIG
    if os.getppid() != parent:
        os._exit(3)


def main(argv: list[str] | None = None) -> int:
    import cvc5

    _exit_with_parent()

    argv = list(sys.argv[1:] if argv is None else argv)
    if argv == ["--version"]:
        print(f"cvc5 {getattr(cvc5, '__version__', '?')} (python bindings)")
        return 0
    if not argv:
        print('(error "no input file")')
        return 1
    path, opts = argv[-1], argv[:-1]
    cleanup = None
    if path == "-":
        fd, cleanup = tempfile.mkstemp(suffix=".smt2")
        with os.fdopen(fd, "w") as fh:
            fh.write(sys.stdin.read())
        path = cleanup
    try:
        solver = cvc5.Solver()
        for o in opts:
            key, value = _option(o)
            if key == "lang":
                continue
            solver.setOption(key, value)
        tm = solver.getTermManager() if hasattr(solver, "getTermManager") else solver
        sm = cvc5.SymbolManager(tm)
        parser = cvc5.InputParser(solver, sm)
        parser.setFileInput(cvc5.InputLanguage.SMT_LIB_2_6, path)
        while True:
            cmd = parser.nextCommand()
            if cmd.isNull():
                break
            out = cmd.invoke(solver, sm)
            if out.startswith("unknown ("):
                # the binary prints the bare status; the explanation is a separate query
                out = "unknown\n"
            if out:
                sys.stdout.write(out if out.endswith("\n") else out + "\n")
                sys.stdout.flush()
    except Exception as e:  # cvc5 raises RuntimeError subclasses on bad input/options
        msg = str(e).replace('"', "'")
        print(f'(error "{msg}")', flush=True)
        return 1
    finally:
        if cleanup:
            os.unlink(cleanup)
    return 0


if __name__ == "__main__":
    sys.exit(main())
