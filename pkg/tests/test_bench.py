import csv
import io
import json
import shutil

import pytest

from indlemma.bench import (
    CSV_COLUMNS,
    ReportError,
    RunReport,
    TaskRecord,
    aggregate,
    discover,
    infer_benchmark,
    load_report,
    report_csv,
    run_bench,
    summarize,
    write_report,
)
from indlemma.certificate import check_certificate, load_certificate
from indlemma.engine import EngineConfig
from indlemma.resources import suite_dir

OFF = EngineConfig(engine_off=True, task_time_limit=5)


def rec(task, bench, t=None, fast=False):
    """A record solved in ``t`` seconds, or unsolved when ``t`` is None."""
    if t is None:
        return TaskRecord(task, bench, "NotProved", 1.0)
    return TaskRecord(task, bench, "Proved", t, solved_under_1200s=True,
                      solved_under_360s=t < 360, prompt_tokens=1000, completion_tokens=250)


def table_records():
    # (benchmark, total, solved under 1200s, solved under 360s)
    groups = [("StandardDT", 241, 212, 200), ("StandardDTLIA", 168, 134, 127),
              ("AutoProofBM", 141, 65, 61), ("IndBen", 156, 114, 104)]
    slow_total = 525 * 97.30 - 492 * 58.66
    slow = [673.0] * 32 + [round(slow_total - 32 * 673.0, 2)]
    out = []
    for name, total, s1200, s360 in groups:
        for i in range(total):
            if i < s360:
                t = 58.66
            elif i < s1200:
                t = slow.pop()
            else:
                t = None
            out.append(rec(f"{name}/t{i:03d}.smt2", name, t))
    assert not slow
    return out


def test_table_summary():
    records = table_records()
    report = RunReport(records, aggregate(records))
    t = report.summary["total"]
    assert (t["total"], t["solved_1200"], t["solved_360"]) == (706, 525, 492)
    assert (t["avg_time_1200"], t["avg_time_360"]) == (97.3, 58.66)
    text = summarize(report)
    lines = {line.split("|")[0].strip(): [c.strip() for c in line.split("|")[1:]]
             for line in text.splitlines() if "|" in line}
    assert lines["Total"] == ["706", "525", "492"]
    assert lines["StandardDT"] == ["241", "212", "200"]
    assert lines["IndBen"] == ["156", "114", "104"]
    assert lines["Avg time (s)"] == ["", "97.30", "58.66"]
    assert lines["Tokens (M)"][1] == f"{525 * 1250 / 1e6:.2f}"


def test_single_task_averages():
    one = [rec("a.smt2", "X", 42.5)]
    s = aggregate(one)["total"]
    assert s["avg_time_1200"] == s["avg_time_360"] == 42.5


def test_averages_cover_solved_only():
    s = aggregate([rec("a", "X", 10.0), rec("b", "X", None), rec("c", "X", 500.0)])["total"]
    assert s["avg_time_1200"] == 255.0 and s["avg_time_360"] == 10.0


def test_empty_summary():
    report = RunReport([], aggregate([]))
    assert report.summary["total"]["total"] == 0
    total = [line for line in summarize(report).splitlines() if line.startswith("Total")]
    assert [c.strip() for c in total[0].split("|")] == ["Total", "0", "0", "0"]


def test_load_report_recomputes(tmp_path):
    records = table_records()[:50]
    report = RunReport(records, aggregate(records))
    paths = write_report(report, tmp_path)
    assert load_report(paths["json"]).summary == report.summary
    data = json.loads(paths["json"].read_text())
    data["summary"]["total"]["solved_360"] += 1
    paths["json"].write_text(json.dumps(data))
    with pytest.raises(ReportError, match="does not match"):
        load_report(paths["json"])


def test_threshold_invariant(tmp_path):
    bad = TaskRecord("a", "X", "Proved", 10.0, solved_under_360s=True)
    report = RunReport([bad], aggregate([bad]))
    paths = write_report(report, tmp_path)
    with pytest.raises(ReportError, match="360s"):
        load_report(paths["json"])


def test_truncated_report(tmp_path):
    p = tmp_path / "report.json"
    p.write_text('{"records": [')
    with pytest.raises(ReportError):
        load_report(p)


def test_csv_columns_frozen():
    text = report_csv(RunReport([rec("a", "X", 1.0)]))
    header = next(csv.reader(io.StringIO(text)))
    assert tuple(header) == CSV_COLUMNS == (
        "task", "benchmark", "outcome", "status", "solved_under_1200s", "solved_under_360s",
        "depth", "nodes", "attempts", "queries", "prompt_tokens", "completion_tokens",
        "certificate", "error", "wall_seconds")
    assert "wall_seconds" not in report_csv(RunReport([rec("a", "X", 1.0)]), include_timing=False)


@pytest.mark.parametrize("rel, want", [
    ("StandardDT/isaplanner/p1.smt2", "StandardDT"),
    ("standarddtlia/p1.smt2", "StandardDTLIA"),
    ("IndBen-2024/a/b.smt2", "IndBen"),
    ("misc/p.smt2", "misc"),
])
def test_infer_benchmark(tmp_path, rel, want):
    assert infer_benchmark(tmp_path / rel, tmp_path) == want


def test_discover_task_list(tmp_path):
    (tmp_path / "a").mkdir()
    shutil.copy(suite_dir() / "nat_plus_zero.smt2", tmp_path / "a" / "p.smt2")
    lst = tmp_path / "tasks.txt"
    lst.write_text("# one task\n\na/p.smt2  # trailing comment\n")
    root, tasks = discover(lst)
    assert [t.name for t in tasks] == ["p.smt2"] and root == tmp_path.resolve()
    with pytest.raises(FileNotFoundError):
        discover(tmp_path / "missing")


def test_empty_directory(tmp_path):
    report = run_bench(tmp_path, OFF)
    assert report.records == [] and report.summary["total"]["total"] == 0


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    src = tmp_path_factory.mktemp("src")
    (src / "IndBen").mkdir()
    shutil.copy(suite_dir() / "nat_plus_zero.smt2", src / "IndBen" / "plus_zero.smt2")
    shutil.copy(suite_dir() / "nat_mult_comm.smt2", src / "IndBen" / "mult_comm.smt2")
    (src / "broken.smt2").write_text("(declare-datatype Nat ((zero) (succ (p Nat)))\n(assert")
    out = tmp_path_factory.mktemp("out")
    return run_bench(src, OFF, out_dir=out), out


def test_run_records(small_run):
    report, out = small_run
    by = {r.task: r for r in report.records}
    assert list(by) == ["IndBen/mult_comm.smt2", "IndBen/plus_zero.smt2", "broken.smt2"]
    assert by["broken.smt2"].outcome == "Error" and by["broken.smt2"].error
    assert by["IndBen/mult_comm.smt2"].outcome == "NotProved"
    done = by["IndBen/plus_zero.smt2"]
    assert done.outcome == "Proved" and done.solved_under_360s and done.benchmark == "IndBen"
    assert report.summary["total"]["errors"] == 1
    assert report.metadata["mode"] == "engine-off" and report.metadata["timing_reliable"]
    assert check_certificate(load_certificate(out / done.certificate)).ok


def test_run_report_files(small_run, tmp_path):
    report, _ = small_run
    paths = write_report(report, tmp_path)
    assert load_report(paths["json"]).records == report.records
    assert paths["summary"].read_text() == summarize(report)


def test_bad_parallelism(tmp_path):
    with pytest.raises(ValueError):
        run_bench(tmp_path, OFF, task_parallelism=0)
