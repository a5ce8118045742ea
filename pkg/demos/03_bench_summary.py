"""A replay-mode batch run over the five shipped tasks.

Writes report.json, report.csv, summary.txt and certificates/ into a
temporary directory and prints the summary table.  With the short limits
below the run takes a few minutes on one core.

    python3 demos/03_bench_summary.py
"""

import tempfile

from indlemma.bench import load_report, run_bench, summarize, write_report
from indlemma.engine import EngineConfig
from indlemma.llm import ModelConfig
from indlemma.resources import suite_dir, transcripts_dir

out = tempfile.mkdtemp(prefix="bench-")
cfg = EngineConfig(task_time_limit=360, initial_check_timeout=10, verify_timeout=30)
model = ModelConfig(mode="replay", transcripts=str(transcripts_dir()))

report = run_bench(suite_dir(), cfg, model, out_dir=out, benchmark="MiniSuite")
paths = write_report(report, out)

for r in report.records:
    print(f"{r.task:22s} {r.outcome:9s} {r.wall_seconds:7.1f}s  depth {r.depth}  "
          f"queries {r.queries}")
print()
print(summarize(report))

# the stored summary is recomputed from the records on load
again = load_report(paths["json"])
print("reloaded", len(again.records), "records from", paths["json"])
