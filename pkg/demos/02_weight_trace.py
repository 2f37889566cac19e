"""
Watching the ensemble weights adapt
===================================

Two domain models translate a sentence from the biomedical domain. Both
start with equal weight; every emitted word updates the task posterior, and
words only the biomedical model knows well push its weight up.

The per-step weights are written as CSV (one file, same format as
``bidecode decode --trace``) next to a small text plot.

Run with ``python demos/02_weight_trace.py [OUT_DIR]``.
"""
import os
import sys

from bidecode.decoder import beam_search, trace_to_csv
from bidecode.synthetic import make_translation_task

out_dir = sys.argv[1] if len(sys.argv) > 1 else "trace_demo"

task = make_translation_task(domains=("general", "biomed"), n_train=200, n_test=20, seed=0)
spec = task.spec(strategy="bi", alpha=0.5, lambda_mode="identity", task_prior_mode="uniform")

src = next(s for sub, s, _ in task.test
           if sub == "biomed" and sum(w in task.exclusive["biomed"] for w in s) >= 3)
hyp, trace = beam_search(spec, src, beam=4)

print("source:", " ".join(src))
print("output:", " ".join(hyp.words(spec.vocab)))
print()
exclusive = {"T" + w for w in task.exclusive["biomed"]}
# Trace rows hold the weight used to pick each token; shift by one to show
# the weight right after the token was emitted.
after = list(trace.weights[1:, 1]) + [spec.weights(hyp.posterior)[1]]
print(f"{'<start>':>16}   {trace.weights[0, 1]:6.3f} {'#' * 20}")
for tok, w in zip(trace.tokens, after):
    bar = "#" * int(round(w * 40))
    mark = "*" if tok in exclusive else " "
    print(f"{tok:>16} {mark} {w:6.3f} {bar}")
print("(* = word only the biomedical domain uses)")

os.makedirs(out_dir, exist_ok=True)
path = os.path.join(out_dir, "weights.csv")
with open(path, "w", encoding="utf-8") as f:
    f.write(trace_to_csv(trace))
print("\nwrote", path)
