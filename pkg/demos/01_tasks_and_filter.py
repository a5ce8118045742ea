"""Tasks, labels, obligations and the conjecture filter.

No model is involved here; every call below is either pure Python or a
short solver run (one second at most per filter check).

    python3 demos/01_tasks_and_filter.py
"""

from indlemma.filtering import filter_batch, is_filtered
from indlemma.resources import running_example
from indlemma.smtlib import build_proof_obligation, parse_file, parse_formula, preprocess_label
from indlemma.solvers import run_portfolio, select
from indlemma.solvers.config import DEFAULT_BACKEND

# the shipped running example: Peano naturals, plus, mult, and a goal
task = parse_file(running_example())
print(len(task.all_datatypes()), "datatype(s),", len(task.all_functions()), "functions,",
      len(task.axioms), "axioms")

# the labeled form is what a prompt template receives
labeled = preprocess_label(task)
print(labeled.full_text)

# the filter rejects cheap mistakes before any verification is tried
for text in [
    "(forall ((x Nat)) (= (plus x zero) zero))",            # contradicts the axioms
    "(forall ((a Nat) (b Nat)) (= (mult a b) (mult b a)))",  # the goal, renamed
    "(forall ((x Nat)) (= (plus x zero) x)",                 # unbalanced
    "(forall ((x Nat) (y Nat)) (= (plus x y) (plus y x)))",  # fine
]:
    print(f"{str(is_filtered(text, task)):36s} {text}")

# batches are strict by default: one bad conjecture sinks the batch
batch = ["(forall ((x Nat) (y Nat)) (= (plus x y) (plus y x)))",
         "(forall ((x Nat)) (= (plus x zero) zero))"]
print(filter_batch(batch, task))
print(filter_batch(batch, task, mode="drop-bad").accepted)

# a conjecture is useful when axioms + conjecture + negated goal is unsat
lemma = parse_formula("(forall ((x Nat)(y Nat)) (= (plus (mult y x) y) (mult y (succ x))))", task)
script = build_proof_obligation(task, [lemma])
verdict = run_portfolio(script, select(DEFAULT_BACKEND), timeout=30)
print(verdict.outcome, "from", verdict.config_name, f"in {verdict.elapsed:.1f}s")
