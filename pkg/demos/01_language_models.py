"""
Domain language models, task priors and the lambda matrix
=========================================================

Train one bigram model per domain, check that ARPA export is lossless,
then use the models as a domain classifier: the task prior of a sentence
and the lambda matrix that relates models to tasks.

Run with ``python demos/01_language_models.py``.
"""
import numpy as np

from bidecode import ngram_lm
from bidecode.bi_core import lambda_matrix, task_prior
from bidecode.synthetic import make_translation_task

task = make_translation_task(domains=("health", "bio", "chem"), n_train=200, seed=0)

# One source-side model per domain.
lms = task.source_lms(order=2)
for name, lm in zip(task.domains, lms):
    print(f"{name:>6}: {lm!r}")

# Export and re-import: the tables survive bit for bit.
text = ngram_lm.save_arpa(lms[0])
print("\n".join(text.splitlines()[:6]))
back = ngram_lm.load_arpa(text)
assert back.logprobs == lms[0].logprobs

# A sentence from the bio domain, scored by every model.
sub, src, ref = next(t for t in task.test if t[0] == "bio")
print("\nsource:", " ".join(src))
for name, lm in zip(task.domains, lms):
    print(f"  log10 p under {name:>6}: {ngram_lm.sentence_logprob(lm, src):9.3f}")

# The prior flattens as alpha shrinks; alpha=0 is exactly uniform.
for alpha in (1.0, 0.5, 0.1, 0.0):
    prior = task_prior(lms, src, alpha)
    print(f"  alpha={alpha:<4} prior={np.round(prior, 4)}")

# lambda[k, t]: how well model k covers the dev text of task t.
lam = lambda_matrix(lms, task.dev, alpha=0.5, domains=task.domains, tasks=task.domains)
print("\nlambda (rows = models, columns = tasks):")
print(np.round(lam.values, 4))
