"""Acceptance criteria, one test each.

Each test records a PASS/FAIL line that pytest prints in its terminal
summary under "acceptance criteria".
"""
import importlib
import time

import numpy as np
import pytest

from bidecode.bi_core import EnsembleSpec, posterior_step
from bidecode.corpus_filter import FilterConfig, LanguageIdentifier, run_pipeline
from bidecode.decoder import beam_search, decode_corpus
from bidecode.evaluation import bleu
from bidecode.ngram_lm import Vocabulary
from bidecode.synthetic import (
    make_medline_like_task, make_planted_filter_corpus, make_translation_task,
)

import oracles
from conftest import TableScorer, criterion

pytestmark = pytest.mark.acceptance


def test_criterion_1_uniform_reduction():
    with criterion(1, "BI with alpha=0 equals the uniform ensemble") as box:
        start = time.perf_counter()
        task = make_translation_task(n_test=17, n_train=150, seed=1)
        sources = task.sources()[:50]
        assert len(sources) == 50
        bi = task.spec(strategy="bi", alpha=0.0)
        uni = task.spec(strategy="uniform")
        worst = 0.0
        for x in sources:
            h_bi, _ = beam_search(bi, x, beam=4, max_len=40)
            h_uni, _ = beam_search(uni, x, beam=4, max_len=40)
            assert h_bi.tokens == h_uni.tokens
            worst = max(worst, abs(h_bi.score - h_uni.score))
        elapsed = time.perf_counter() - start
        box["detail"] = f"50 sentences, max |score diff| {worst:.2e}, {elapsed:.1f}s"
        assert worst <= 1e-9
        assert elapsed < 10


def test_criterion_2_brute_force_oracle():
    with criterion(2, "beam 64 equals exhaustive argmax") as box:
        start = time.perf_counter()
        vocab = Vocabulary(["a", "b", "c"])  # 6 ids including <s>, </s>, <unk>
        instances = 0
        checked = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            k, t = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            max_len = int(rng.integers(1, 5))
            scorers = [TableScorer(vocab, ("acc2", seed, i), float(rng.uniform(0.3, 2)))
                       for i in range(k)]
            lam = rng.dirichlet(np.ones(k), size=t).T
            prior = rng.dirichlet(np.ones(t))
            for strategy in ("single", "uniform", "fixed", "bi"):
                spec = EnsembleSpec(scorers, strategy=strategy, lambda_mode="explicit",
                                    lambda_values=lam, task_prior_mode=prior,
                                    selected=int(rng.integers(k)))
                hyp, _ = beam_search(spec, ["src"], beam=64, max_len=max_len)
                best, scored = oracles.exhaustive_best(
                    scorers, ("src",), len(vocab), max_len, strategy, prior.tolist(),
                    lam.tolist(), spec.selected)
                top = min((toks for s, toks in scored if s >= best - 1e-9))
                assert hyp.finished
                assert abs(hyp.score - best) <= 1e-9, (seed, strategy)
                assert hyp.tokens == top, (seed, strategy)
                checked += 1
            instances += 1
        elapsed = time.perf_counter() - start
        box["detail"] = f"{instances} instances x 4 strategies = {checked} checks, {elapsed:.1f}s"
        assert instances >= 100 and elapsed < 60


def test_criterion_3_posterior_oracle():
    with criterion(3, "iterated posterior_step equals one-shot Bayes") as box:
        rng = np.random.default_rng(2024)
        worst = 0.0
        trials = 2000
        for _ in range(trials):
            k, t = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            n = int(rng.integers(0, 6))
            lam = rng.dirichlet(np.ones(k), size=t).T
            prior = rng.dirichlet(np.ones(t))
            steps = rng.uniform(1e-4, 1.0, size=(n, k))
            post = prior
            for s in steps:
                post = posterior_step(post, s, lam)
            expected = oracles.bayes_posterior(prior.tolist(), steps.tolist(), lam.tolist())
            worst = max(worst, float(np.max(np.abs(post - expected))))
        box["detail"] = f"{trials} trials, max abs error {worst:.2e}"
        assert worst <= 1e-9


def test_criterion_4_weight_trace():
    with criterion(4, "in-domain weight rises from 0.5 to > 0.9") as box:
        start = time.perf_counter()
        task = make_translation_task(domains=("general", "biomed"), n_train=200, n_test=20, seed=0)
        spec = task.spec(strategy="bi", alpha=0.5, lambda_mode="identity",
                         task_prior_mode="uniform")
        exclusive = {"T" + w for w in task.exclusive["biomed"]}
        col = task.domains.index("biomed")
        sentences = [src for sub, src, _ in task.test
                     if sub == "biomed" and sum(w in task.exclusive["biomed"] for w in src) >= 3]
        assert sentences
        summaries = []
        for src in sentences:
            hyp, trace = beam_search(spec, src, beam=4, max_len=40)
            w = list(trace.weights[:, col]) + [float(spec.weights(hyp.posterior)[col])]
            rises = [w[i + 1] > w[i] for i, tok in enumerate(trace.tokens) if tok in exclusive]
            assert abs(w[0] - 0.5) <= 0.05
            assert w[-1] > 0.9
            assert len(rises) >= 3 and all(rises)
            summaries.append(f"{w[0]:.2f}->{w[-1]:.3f}")
        elapsed = time.perf_counter() - start
        box["detail"] = (f"{len(sentences)} sentences with >= 3 exclusive tokens "
                         f"(first: {summaries[0]}), {elapsed:.1f}s")
        assert elapsed < 5


def _pooled_bleu(seeds, n_test):
    hyps = {"uniform": [], "bi-0.1": [], "bi-0.5": []}
    refs = []
    for seed in seeds:
        task = make_medline_like_task(seed=seed, n_test=n_test)
        specs = {"uniform": task.spec(strategy="uniform"),
                 "bi-0.1": task.spec(strategy="bi", alpha=0.1),
                 "bi-0.5": task.spec(strategy="bi", alpha=0.5)}
        refs += task.references()
        for name, spec in specs.items():
            for r in decode_corpus(spec, task.sources(), beam=4, max_len=40):
                hyps[name].append(" ".join(r.hypothesis.words(spec.vocab)))
    return {name: bleu(h, refs, cased=False).score for name, h in hyps.items()}


def test_criterion_5_alpha_trend():
    with criterion(5, "BI(0.1) >= uniform - 0.2 and >= BI(0.5) - 0.2") as box:
        scores = _pooled_bleu(range(10), 60)
        box["detail"] = ", ".join(f"{k} {v:.2f}" for k, v in scores.items())
        assert scores["bi-0.1"] >= scores["uniform"] - 0.2
        assert scores["bi-0.1"] >= scores["bi-0.5"] - 0.2


def test_criterion_6_single_model_convergence():
    with criterion(6, "final max posterior > 0.99 on >= 90% of sentences") as box:
        task = make_translation_task(foreign_rate=0.0, n_test=30, seed=3)
        spec = task.spec(strategy="bi", alpha=0.5, lambda_mode="identity", task_prior_mode="lm")
        finals = []
        for r in decode_corpus(spec, task.sources(), beam=4, max_len=40):
            finals.append(float(np.max(r.hypothesis.posterior)))
        share = float(np.mean(np.array(finals) > 0.99))
        box["detail"] = f"{share:.1%} of {len(finals)} sentences, median {np.median(finals):.5f}"
        assert share >= 0.90


def test_criterion_7_filter_report():
    with criterion(7, "planted filter violations counted exactly, idempotent") as box:
        start = time.perf_counter()
        corpus = make_planted_filter_corpus(n_clean=750, n_per_rule=50, seed=0)
        langid = LanguageIdentifier.train(corpus.seeds)
        cfg = FilterConfig(source_lang="ka", target_lang="ro")
        kept, report = run_pipeline(corpus.source, corpus.target, cfg, langid)
        again, report2 = run_pipeline([p.raw_source for p in kept], [p.raw_target for p in kept],
                                      cfg, langid)
        elapsed = time.perf_counter() - start
        box["detail"] = f"rejected {report.rejected}, rerun rejects {sum(report2.rejected.values())}, {elapsed:.1f}s"
        assert report.rejected == corpus.planted
        assert report.retained + sum(report.rejected.values()) == report.input == 1000
        assert again == kept and sum(report2.rejected.values()) == 0
        assert elapsed < 5


def test_criterion_8_bleu_sanity():
    with criterion(8, "BLEU sanity") as box:
        import math
        refs = ["The cat is on the mat .", "A dog runs in the park ."]
        identical = bleu(refs, refs).score
        hyps = ["the cat sat on the mat", "a dog"]
        hand_refs = ["the cat is on the mat", "a dog runs"]
        p = [7 / 8, 4 / 6, 1 / 4, 1 / (2 * 3)]
        hand = 100 * math.exp(1 - 9 / 8) * math.exp(sum(math.log(v) for v in p) / 4)
        got = bleu(hyps, hand_refs).score
        mixed = ["The Cat SAT on the mat", "A dog"]
        uncased = bleu(mixed, refs, cased=False).score
        lowered = bleu([h.lower() for h in mixed], [r.lower() for r in refs]).score
        box["detail"] = f"identical {identical}, hand {got:.6f} vs {hand:.6f}, uncased {uncased:.6f}"
        assert identical == 100.0
        assert abs(got - hand) <= 1e-6
        assert uncased == lowered


PROPERTY_MODULES = ("test_ngram_lm", "test_bi_core", "test_scorers", "test_decoder",
                    "test_corpus_filter", "test_evaluation")


def test_criterion_9_property_suites():
    with criterion(9, "property suites with >= 1000 cases each") as box:
        start = time.perf_counter()
        ran = []
        for name in PROPERTY_MODULES:
            mod = importlib.import_module(name)
            for attr, fn in sorted(vars(mod).items()):
                if not getattr(fn, "is_hypothesis_test", False):
                    continue
                assert fn._hypothesis_internal_use_settings.max_examples >= 1000, attr
                fn()
                ran.append(f"{name}.{attr}")
        required = ["test_normalization_and_positivity", "test_determinism_property",
                    "test_prior_scale_invariance", "test_lambda_column_stochastic",
                    "test_arpa_round_trip_property"]
        for req in required:
            assert any(r.endswith(req) for r in ran), req
        box["detail"] = f"{len(ran)} suites, {time.perf_counter() - start:.0f}s"
