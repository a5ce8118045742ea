"""Prove the running example from recorded model answers, then re-check it.

Replay mode reads the transcripts shipped with the package, so nothing
leaves the machine.  The initial checks are cut to 10s here (the default
is 60s per node); replay keys do not depend on solver timeouts.

    python3 demos/02_replay_proof.py
"""

import tempfile
from pathlib import Path

from indlemma.certificate import check_certificate, load_certificate, write_certificate
from indlemma.engine import EngineConfig, ProofEngine
from indlemma.llm import LLMClient, ModelConfig
from indlemma.resources import running_example, transcripts_dir
from indlemma.smtlib import parse_file, render_term

task = parse_file(running_example())
client = LLMClient(ModelConfig(mode="replay", transcripts=str(transcripts_dir())))
engine = ProofEngine(EngineConfig(initial_check_timeout=10), client)

outcome = engine.prove_task(task)
print("proved" if outcome.proved else "not proved", f"in {outcome.wall_time:.1f}s,",
      outcome.queries, "queries,", outcome.usage.total, "tokens")

# each node either closed directly or through the lemmas of its children
for node in outcome.root.walk():
    print("  " * node.depth + f"{node.path} [{node.status}] {render_term(node.task.goal)}")
    for a in node.attempts:
        print("  " * node.depth + f"    {a.strategy} #{a.iteration}: {a.result}")

# the certificate is plain JSON; checking it needs only a solver
cert = Path(tempfile.mkdtemp()) / "mult_comm.cert.json"
write_certificate(outcome, cert)
report = check_certificate(load_certificate(cert))
print("certificate", "valid" if report.ok else report.failures,
      f"({report.checked} obligations)")
