"""
Uniform ensemble versus adaptive interpolation
==============================================

Three overlapping domain models (health, bio and one trained on both)
translate a mixed test set. We compare the best single model, the uniform
ensemble, fixed weights from the sentence prior, and adaptive interpolation
at two smoothing factors.

A small alpha keeps the posterior soft for longer; a large one lets it
commit to one model after a few words.

Run with ``python demos/03_alpha_comparison.py [N_SEEDS]``.
"""
import sys

from bidecode.decoder import decode_corpus
from bidecode.evaluation import bleu
from bidecode.synthetic import make_medline_like_task

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 3

systems = {
    "single (all-biomed)": dict(strategy="single", selected=2),
    "uniform": dict(strategy="uniform"),
    "fixed, alpha=0.5": dict(strategy="fixed", alpha=0.5),
    "adaptive, alpha=0.5": dict(strategy="bi", alpha=0.5),
    "adaptive, alpha=0.1": dict(strategy="bi", alpha=0.1),
}
hyps = {name: [] for name in systems}
refs = []
for seed in range(n_seeds):
    task = make_medline_like_task(seed=seed, n_test=40)
    refs += task.references()
    for name, kw in systems.items():
        spec = task.spec(**kw)
        for r in decode_corpus(spec, task.sources(), beam=4, max_len=40):
            hyps[name].append(" ".join(r.hypothesis.words(spec.vocab)))

print(f"{len(refs)} test sentences over {n_seeds} generated tasks\n")
for name, h in hyps.items():
    print(f"{name:<22} BLEU {bleu(h, refs, cased=False).score:6.2f}")
