"""Per-token scorers that plug into the ensemble decoder.

A scorer is any object with

* ``vocab``: the output :class:`~bidecode.ngram_lm.Vocabulary`, shared by
  every scorer of one ensemble;
* ``dist(source, history)``: strictly positive distribution (``<s>`` slot
  zero) over ``vocab`` ids for the next output token, where ``source`` is a
  tuple of source token strings and ``history`` a tuple of output ids.

Scorers are immutable after construction and deterministic, so one instance
can serve several decoding threads.
"""
import json
from functools import lru_cache

import numpy as np

from .ngram_lm import BOS_ID, EOS_ID, UNK_ID, Vocabulary


def shared_vocabulary(*token_sources):
    """Sorted union of the non-reserved tokens of vocabularies or token iterables."""
    tokens = set()
    for src in token_sources:
        tokens.update(src)
    return Vocabulary(sorted(tokens - {"<s>", "</s>", "<unk>"}))


def _frozen(arr):
    arr.flags.writeable = False
    return arr


class NgramScorer:
    """Target-side n-gram LM projected onto a shared output vocabulary.

    Output tokens unknown to the LM split the LM's ``<unk>`` mass evenly with
    ``<unk>`` itself, which keeps the projected distribution normalized.
    The source sentence is ignored.
    """

    def __init__(self, lm, vocab=None, cache_size=65536):
        self.lm = lm
        self.vocab = vocab if vocab is not None else lm.vocab
        n = len(self.vocab)
        lm_ids = np.array([lm.vocab.index(t) for t in self.vocab], dtype=np.intp)
        unk_share = lm_ids == UNK_ID
        unk_share[BOS_ID] = False
        unk_share[UNK_ID] = True
        self._lm_ids = lm_ids
        self._unk_mask = unk_share
        self._unk_count = int(unk_share.sum())
        self._n = n
        self._cached = lru_cache(maxsize=cache_size)(self._context_dist)

    def _context_dist(self, context):
        lm_dist = np.power(10.0, self.lm.logdist_id(context))
        out = lm_dist[self._lm_ids]
        out[self._unk_mask] = lm_dist[UNK_ID] / self._unk_count
        out[BOS_ID] = 0.0
        return _frozen(out)

    def dist(self, source, history):
        lm_hist = self._lm_ids[list(history)] if history else ()
        return self._cached(self.lm.context(tuple(int(i) for i in lm_hist)))


class LexiconScorer:
    """Monotone word-for-word translation channel interpolated with a target LM.

    At output position ``i`` the channel proposes translations of source
    token ``i`` from a probabilistic dictionary; past the end of the source
    it proposes ``</s>``. Source words missing from the dictionary are
    channelled to ``<unk>``. The final distribution is
    ``channel_weight * channel + (1 - channel_weight) * lm``, which is
    strictly positive because the LM is.

    Args:
        lexicon: ``{source_word: {target_word: prob}}``; each entry is
            renormalized over target words present in ``vocab``.
        lm: target-side n-gram model.
        vocab: shared output vocabulary.
        channel_weight: interpolation weight in (0, 1).
    """

    def __init__(self, lexicon, lm, vocab=None, channel_weight=0.8):
        if not 0 < channel_weight < 1:
            raise ValueError("channel_weight must lie in (0, 1)")
        self.vocab = vocab if vocab is not None else shared_vocabulary(
            lm.vocab, (t for entry in lexicon.values() for t in entry))
        self.channel_weight = channel_weight
        self._lm = NgramScorer(lm, self.vocab)
        n = len(self.vocab)
        self._channels = {}
        for src, entry in lexicon.items():
            vec = np.zeros(n)
            for tgt, p in entry.items():
                if tgt in self.vocab and p > 0:
                    vec[self.vocab.index(tgt)] += p
            if vec.sum() > 0:
                self._channels[src] = _frozen(vec / vec.sum())
        self._unk_channel = np.zeros(n)
        self._unk_channel[UNK_ID] = 1.0
        self._eos_channel = np.zeros(n)
        self._eos_channel[EOS_ID] = 1.0

    def channel(self, source, position):
        if position >= len(source):
            return self._eos_channel
        return self._channels.get(source[position], self._unk_channel)

    def dist(self, source, history):
        chan = self.channel(source, len(history))
        lm = self._lm.dist(source, history)
        return self.channel_weight * chan + (1.0 - self.channel_weight) * lm


class PrecomputedScorer:
    """Replay per-step distributions produced elsewhere (e.g. by a neural model).

    Reads JSON lines of the form::

        {"source": ["tok", ...], "steps": [[{"token": "t", "p": 0.7}, ...], ...]}

    ``steps[i]`` is the distribution for output position ``i`` regardless of
    the history that led there. Tokens a step does not list share the
    remaining mass ``1 - sum(listed)``; if nothing remains they get
    ``floor`` each and the step is renormalized. Positions past the recorded
    steps put ``1 - floor * (V - 2)`` on ``</s>``. Sentences that are not in
    the file raise ``KeyError``.
    """

    def __init__(self, records, vocab=None, floor=1e-9):
        self.floor = floor
        records = list(records)
        if vocab is None:
            vocab = shared_vocabulary(
                d["token"] for r in records for step in r["steps"] for d in step)
        self.vocab = vocab
        self._table = {}
        for r in records:
            key = tuple(r["source"])
            self._table[key] = tuple(self._step_vector(step) for step in r["steps"])
        n = len(vocab)
        tail = np.full(n, floor)
        tail[BOS_ID] = 0.0
        tail[EOS_ID] = 1.0 - floor * (n - 2)
        self._tail = _frozen(tail)

    def _step_vector(self, step):
        n = len(self.vocab)
        vec = np.zeros(n)
        listed = np.zeros(n, dtype=bool)
        for d in step:
            tok = d["token"]
            if tok not in self.vocab:
                raise ValueError(f"token {tok!r} is not in the output vocabulary")
            idx = self.vocab.index(tok)
            if idx == BOS_ID:
                raise ValueError("<s> cannot be scored")
            vec[idx] += float(d["p"])
            listed[idx] = True
        listed[BOS_ID] = True
        rest = ~listed
        remaining = 1.0 - vec.sum()
        if rest.any():
            if remaining > self.floor * rest.sum():
                vec[rest] = remaining / rest.sum()
            else:
                vec[rest] = self.floor
        vec[BOS_ID] = 0.0
        if np.any(vec[1:] <= 0):
            raise ValueError("precomputed distributions must be strictly positive")
        return _frozen(vec / vec.sum())

    @classmethod
    def from_jsonl(cls, path, vocab=None, floor=1e-9):
        with open(path, encoding="utf-8") as f:
            records = [json.loads(line) for line in f if line.strip()]
        return cls(records, vocab, floor)

    def dist(self, source, history):
        steps = self._table[tuple(source)]
        i = len(history)
        return steps[i] if i < len(steps) else self._tail


def write_precomputed(path, items):
    """Write ``(source_tokens, [step_dist_dict, ...])`` pairs as scorer JSONL."""
    with open(path, "w", encoding="utf-8") as f:
        for source, steps in items:
            rec = {"source": list(source),
                   "steps": [[{"token": t, "p": p} for t, p in step.items()] for step in steps]}
            f.write(json.dumps(rec) + "\n")
