"""Synthetic multi-domain translation tasks for desk-scale experiments.

A task is built from atomic *subdomains*. Each subdomain owns exclusive
source words and its own sense for a set of ambiguous words; all of them
share a pool of common words. A *domain* (one model, one task) is trained on
one or more subdomains, so nested setups such as health + bio inside an
all-biomed domain can be expressed.

Translation is monotone and one-to-one, so a sentence's reference is its
word-by-word translation under its subdomain's senses. Every domain model
is a :class:`~bidecode.scorers.LexiconScorer`: a dictionary that is
confident on its own subdomains and hedges elsewhere, optionally corrupted
by per-model noise, interpolated with a bigram LM over the domain's target
training text.
"""
from dataclasses import dataclass, field

import numpy as np

from . import ngram_lm
from .bi_core import EnsembleSpec
from .scorers import LexiconScorer, shared_vocabulary


@dataclass
class ToyTranslationTask:
    """Generated corpora and dictionaries.

    Attributes:
        domains: domain (model/task) names.
        lexicons: per domain, ``{source_word: {target_word: prob}}``.
        src_train, tgt_train: per domain, tokenized training sentences.
        dev: per domain, tokenized source dev sentences.
        test: list of ``(subdomain, source_tokens, reference_tokens)``.
        exclusive: subdomain -> its exclusive source words.
        channel_weight: dictionary weight used by :meth:`scorers`.
    """

    domains: tuple
    lexicons: list
    src_train: list
    tgt_train: list
    dev: list
    test: list
    exclusive: dict = field(default_factory=dict)
    channel_weight: float = 0.95
    _cache: dict = field(default_factory=dict, repr=False)

    def target_lms(self, order=2):
        key = ("tgt", order)
        if key not in self._cache:
            self._cache[key] = [ngram_lm.train(c, order) for c in self.tgt_train]
        return self._cache[key]

    def source_lms(self, order=2):
        key = ("src", order)
        if key not in self._cache:
            self._cache[key] = [ngram_lm.train(c, order) for c in self.src_train]
        return self._cache[key]

    def vocabulary(self):
        return shared_vocabulary(*(lm.vocab for lm in self.target_lms()),
                                 (t for lex in self.lexicons for e in lex.values() for t in e))

    def scorers(self):
        if "scorers" not in self._cache:
            vocab = self.vocabulary()
            self._cache["scorers"] = [LexiconScorer(lex, lm, vocab, self.channel_weight)
                                      for lex, lm in zip(self.lexicons, self.target_lms())]
        return self._cache["scorers"]

    def sources(self):
        return [s for _, s, _ in self.test]

    def references(self):
        return [" ".join(r) for _, _, r in self.test]

    def spec(self, strategy="bi", alpha=0.5, lambda_mode="estimated", task_prior_mode="lm",
             **kwargs):
        """An :class:`EnsembleSpec` over this task's domain scorers."""
        return EnsembleSpec(
            scorers=self.scorers(), domains=self.domains, alpha=alpha, strategy=strategy,
            lambda_mode=lambda_mode, task_prior_mode=task_prior_mode,
            classifier_lms=self.source_lms(),
            task_corpora=self.dev if lambda_mode == "estimated" else None, **kwargs)


def make_translation_task(domains=("health", "bio", "biomed"), training=None, n_shared=30,
                          n_exclusive=12, n_ambiguous=8, n_train=300, n_dev=40, n_test=30,
                          exclusive_rate=0.25, ambiguous_rate=0.2, foreign_rate=0.05,
                          length=(6, 12), own_conf=0.7, foreign_conf=0.5, noise=0.0,
                          shared_noise=0.0, channel_weight=0.95,
                          seed=0):
    """Generate a :class:`ToyTranslationTask`.

    Args:
        domains: domain names, one model and one task each.
        training: domain -> subdomains it is trained on. Defaults to each
            domain being its own subdomain (fully separated domains).
        n_test: test sentences per subdomain.
        exclusive_rate, foreign_rate, ambiguous_rate: per-position
            probabilities of drawing an exclusive word of the sentence's own
            subdomain, of another subdomain, or an ambiguous word; the rest
            are shared words from a subdomain-specific Zipf ranking.
        own_conf: dictionary mass a model gives its preferred sense of an
            ambiguous word.
        foreign_conf: dictionary mass on the correct translation of words
            exclusive to subdomains the model was not trained on (0.9 for
            its own subdomains).
        noise: probability that a model's dictionary prefers a wrong
            translation of a word, drawn independently per (model, word).
        shared_noise: probability that every model prefers the same wrong
            translation of a word (errors inherited from shared training).
        channel_weight: dictionary weight of the lexicon scorers.
    """
    rng = np.random.default_rng(seed)
    training = training or {d: (d,) for d in domains}
    subdomains = sorted({s for subs in training.values() for s in subs},
                        key=lambda s: [s in training[d] for d in domains], reverse=True)
    shared = [f"com{i}" for i in range(n_shared)]
    excl = {s: [f"{s}{j}" for j in range(n_exclusive)] for s in subdomains}
    amb = [f"amb{i}" for i in range(n_ambiguous)]
    zipf = 1.0 / np.arange(1, n_shared + 1)
    zipf /= zipf.sum()
    shared_rank = {s: rng.permutation(n_shared) for s in subdomains}

    def translate(word, sub):
        return f"T{word}_{sub}" if word.startswith("amb") else f"T{word}"

    def sentence(sub):
        n = int(rng.integers(length[0], length[1] + 1))
        others = [s for s in subdomains if s != sub]
        out = []
        for _ in range(n):
            u = rng.random()
            if u < exclusive_rate:
                out.append(excl[sub][int(rng.integers(n_exclusive))])
            elif u < exclusive_rate + foreign_rate and others:
                s2 = others[int(rng.integers(len(others)))]
                out.append(excl[s2][int(rng.integers(n_exclusive))])
            elif u < exclusive_rate + foreign_rate + ambiguous_rate and amb:
                out.append(amb[int(rng.integers(n_ambiguous))])
            else:
                out.append(shared[shared_rank[sub][rng.choice(n_shared, p=zipf)]])
        return out, [translate(w, sub) for w in out]

    def corpus(subs, n):
        pairs = [sentence(subs[i % len(subs)]) for i in range(n)]
        return [p[0] for p in pairs], [p[1] for p in pairs]

    src_train, tgt_train, dev = [], [], []
    for d in domains:
        s, t = corpus(training[d], n_train * len(training[d]))
        src_train.append(s)
        tgt_train.append(t)
        dev.append(corpus(training[d], n_dev)[0])
    test = []
    for _ in range(n_test):
        for sub in subdomains:
            s, t = sentence(sub)
            test.append((sub, s, t))

    all_words = shared + [w for s in subdomains for w in excl[s]]
    shared_flip = {w for w in all_words if rng.random() < shared_noise}

    def entry(word, correct, distractor, conf):
        if (word in shared_flip) != (rng.random() < noise):
            correct, distractor = distractor, correct
        return {correct: conf, distractor: 1.0 - conf}

    lexicons = []
    for d in domains:
        known = set(training[d])
        lex = {}
        for i, w in enumerate(shared):
            lex[w] = entry(w, f"T{w}", f"T{shared[(i + 1) % n_shared]}", 0.9)
        for sub in subdomains:
            for j, w in enumerate(excl[sub]):
                alt = f"T{excl[sub][(j + 1) % n_exclusive]}"
                lex[w] = entry(w, f"T{w}", alt, 0.9 if sub in known else foreign_conf)
        for w in amb:
            senses = [translate(w, s) for s in subdomains]
            mine = [s for s in senses if s.rsplit("_", 1)[1] in known]
            if len(mine) == len(senses) or not mine:
                probs = {s: 1.0 / len(senses) for s in senses}
            else:
                rest = (1.0 - own_conf) / (len(senses) - len(mine))
                probs = {s: (own_conf / len(mine) if s in mine else rest) for s in senses}
            if rng.random() < noise:
                keys = list(probs)
                vals = list(probs.values())
                probs = dict(zip(keys, vals[1:] + vals[:1]))
            lex[w] = probs
        lexicons.append(lex)

    return ToyTranslationTask(tuple(domains), lexicons, src_train, tgt_train, dev, test, excl,
                              channel_weight)


def make_medline_like_task(seed=0, **kwargs):
    """Nested-domain task: health, bio and an all-biomed domain trained on both.

    Test sentences mix the two subdomains. The models stand in for systems
    fine-tuned from one another: each knows every subdomain reasonably well
    and its own best, their dictionaries share most of their errors, and a
    smaller part of the errors is model-specific.
    """
    params = dict(domains=("health", "bio", "all-biomed"),
                  training={"health": ("health",), "bio": ("bio",),
                            "all-biomed": ("health", "bio")},
                  foreign_rate=0.15, own_conf=0.6, foreign_conf=0.8,
                  shared_noise=0.1, noise=0.05, seed=seed)
    params.update(kwargs)
    return make_translation_task(**params)


# Two made-up languages over disjoint letters, so character n-grams tell
# them apart even on very short lines.
_LETTERS = {"ka": ("kmtnp", "ai"), "ro": ("rlvsz", "oue")}


def _make_words(rng, lang, n):
    cons, vows = _LETTERS[lang]
    words = set()
    while len(words) < n:
        syl = rng.integers(1, 4)
        words.add("".join(rng.choice(list(cons)) + rng.choice(list(vows)) for _ in range(syl)))
    return sorted(words)


@dataclass
class PlantedCorpus:
    """Parallel corpus with a known number of violations per filter rule.

    ``source`` is language ``"ka"`` and ``target`` language ``"ro"``;
    ``seeds`` holds separate seed text for the language identifier and
    ``planted`` maps rule name to the number of planted violations.
    """

    source: list
    target: list
    seeds: dict
    planted: dict


def make_planted_filter_corpus(n_clean=750, n_per_rule=50, seed=0):
    """Build a corpus where every planted pair violates exactly one rule.

    Plants (with the default filter settings) are:

    * language: one side written in the other language;
    * length: both sides longer than 120 tokens;
    * duplicate: a verbatim copy of an earlier clean pair;
    * ratio: 16 source tokens against 4 target tokens;
    * repeat: 10 tokens of which one appears 4 times.
    """
    rng = np.random.default_rng(seed)
    words = {lang: _make_words(rng, lang, 400) for lang in _LETTERS}
    seen = set()

    def line(lang, n, repeat=0):
        toks = list(rng.choice(words[lang], size=n - max(repeat - 1, 0), replace=False))
        if repeat:
            toks += [toks[0]] * (repeat - 1)
            rng.shuffle(toks)
        return " ".join(toks)

    def pair(ns, nt, src_lang="ka", tgt_lang="ro", repeat_side=None):
        while True:
            s = line(src_lang, ns, 4 if repeat_side == "src" else 0)
            t = line(tgt_lang, nt, 4 if repeat_side == "tgt" else 0)
            if (s, t) not in seen:
                seen.add((s, t))
                return s, t

    def clean():
        n = int(rng.integers(5, 13))
        return pair(n, int(rng.integers(max(4, n - 3), n + 4)))

    items = [clean() for _ in range(n_clean)]
    clean_set = set(items)
    planted = {"language": n_per_rule, "length": n_per_rule, "duplicate": n_per_rule,
               "ratio": n_per_rule, "repeat": n_per_rule}
    for i in range(n_per_rule):
        n = int(rng.integers(5, 13))
        items.append(pair(n, n, "ka", "ka") if i % 2 else pair(n, n, "ro", "ro"))
        items.append(pair(*(int(v) for v in rng.integers(121, 135, size=2))))
        items.append(pair(16, 4) if i % 2 else pair(4, 16))
        items.append(pair(10, 10, repeat_side="src" if i % 2 else "tgt"))
    order = rng.permutation(len(items))
    items = [items[i] for i in order]
    # Each duplicate goes somewhere after a randomly chosen clean original.
    originals = [p for p in items if p in clean_set]
    for j in rng.choice(len(originals), size=n_per_rule, replace=False):
        orig = originals[j]
        pos = items.index(orig)
        items.insert(int(rng.integers(pos + 1, len(items) + 1)), orig)
    seeds = {lang: [line(lang, int(rng.integers(5, 15))) for _ in range(200)] for lang in _LETTERS}
    return PlantedCorpus([s for s, _ in items], [t for _, t in items], seeds, planted)
