"""Backoff n-gram language models with ARPA persistence.

Probabilities are stored as log10 values, exactly as they appear in an ARPA
file, so a trained model and the same model re-loaded from disk share one
representation. Training uses interpolated smoothing of the form::

    p(w | h) = (c(h, w) + beta(h) * p(w | h')) / (c(h) + beta(h))

where ``h'`` drops the oldest context token. ``beta(h)`` is the number of
distinct continuations of ``h`` for Witten-Bell and ``k * V`` for add-k.
Because the unseen-word branch of that formula is ``beta / (c + beta)``
times the lower order, the backoff weight of every context is exactly
``beta(h) / (c(h) + beta(h))`` and the ARPA export is lossless.

The prediction space ``V`` is every vocabulary entry except ``<s>``: the
word types, ``</s>`` and ``<unk>``.
"""
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

BOS, EOS, UNK = "<s>", "</s>", "<unk>"
BOS_ID, EOS_ID, UNK_ID = 0, 1, 2
RESERVED = (BOS, EOS, UNK)

# log10 value written for <s>, which is never predicted (ARPA convention).
ARPA_LOG_ZERO = -99.0

LN10 = math.log(10.0)


class Vocabulary:
    """Bijective token <-> id mapping with ``<s>``, ``</s>``, ``<unk>`` at 0, 1, 2.

    Reserved markers in ``tokens`` are ignored, duplicates keep their first
    position.
    """

    def __init__(self, tokens=()):
        self._tokens = list(RESERVED)
        self._index = {t: i for i, t in enumerate(RESERVED)}
        for tok in tokens:
            if tok not in self._index:
                self._index[tok] = len(self._tokens)
                self._tokens.append(tok)

    def __len__(self):
        return len(self._tokens)

    def __iter__(self):
        return iter(self._tokens)

    def __contains__(self, token):
        return token in self._index

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self._tokens == other._tokens

    def __hash__(self):
        return hash(tuple(self._tokens))

    def __repr__(self):
        return f"Vocabulary({len(self)} tokens)"

    @property
    def tokens(self):
        return tuple(self._tokens)

    def index(self, token):
        """Id of ``token``; unknown tokens map to ``UNK_ID``."""
        return self._index.get(token, UNK_ID)

    def token(self, idx):
        return self._tokens[idx]

    def encode(self, tokens):
        return [self._index.get(t, UNK_ID) for t in tokens]

    def decode(self, ids):
        return [self._tokens[i] for i in ids]


@dataclass(frozen=True)
class Smoothing:
    """Smoothing configuration for :func:`train`.

    Attributes:
        method: ``"witten_bell"`` (default), ``"add_k"`` or ``"uniform"``.
            ``"uniform"`` ignores counts and assigns ``1/V`` to every
            predictable token.
        k: pseudo-count for ``"add_k"``.
    """

    method: str = "witten_bell"
    k: float = 1.0

    def __post_init__(self):
        if self.method not in ("witten_bell", "add_k", "uniform"):
            raise ValueError(f"unknown smoothing method {self.method!r}")
        if self.method == "add_k" and not self.k > 0:
            raise ValueError("add-k smoothing needs k > 0")


class ArpaParseError(ValueError):
    """Malformed ARPA input. ``lineno`` is 1-based."""

    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class NgramModel:
    """Immutable backoff n-gram model.

    Args:
        order: maximum n-gram length.
        vocab: the :class:`Vocabulary`.
        logprobs: one dict per order, mapping id tuples to log10 p.
            ``logprobs[0]`` must cover every predictable unigram.
        backoffs: log10 backoff weight per context id tuple.
        n_train_tokens: number of predicted training tokens (EOS included),
            ``None`` for models loaded from ARPA.
    """

    def __init__(self, order, vocab, logprobs, backoffs, n_train_tokens=None):
        if order < 1:
            raise ValueError("invalid order")
        self.order = order
        self.vocab = vocab
        self.n_train_tokens = n_train_tokens
        self._logprobs = [dict(d) for d in logprobs]
        while len(self._logprobs) < order:
            self._logprobs.append({})
        self._backoffs = dict(backoffs)

        uni = np.full(len(vocab), -np.inf)
        for (w,), lp in self._logprobs[0].items():
            if w != BOS_ID:
                uni[w] = lp
        uni.flags.writeable = False
        self._uni = uni

        children = defaultdict(lambda: ([], []))
        for table in self._logprobs[1:]:
            for ngram, lp in table.items():
                ids, lps = children[ngram[:-1]]
                ids.append(ngram[-1])
                lps.append(lp)
        self._children = {
            ctx: (np.asarray(ids, dtype=np.intp), np.asarray(lps, dtype=float))
            for ctx, (ids, lps) in children.items()
        }

    def __repr__(self):
        sizes = ", ".join(str(len(t)) for t in self._logprobs)
        return f"NgramModel(order={self.order}, vocab={len(self.vocab)}, ngrams=[{sizes}])"

    @property
    def logprobs(self):
        return self._logprobs

    @property
    def backoffs(self):
        return self._backoffs

    def context(self, history_ids):
        """Backoff context for predicting the token after ``history_ids``."""
        if self.order == 1:
            return ()
        full = (BOS_ID,) + tuple(history_ids)
        return full[-(self.order - 1):]

    def logprob_id(self, context, w):
        """log10 p(w | context) for id tuple ``context``."""
        if not context:
            return self._uni[w]
        lp = self._logprobs[len(context)].get(context + (w,))
        if lp is not None:
            return lp
        return self._backoffs.get(context, 0.0) + self.logprob_id(context[1:], w)

    def logdist_id(self, context):
        """log10 distribution over all ids for id tuple ``context``.

        Performs the same float operations as :meth:`logprob_id`, so entries
        agree bit-for-bit with scalar lookups.
        """
        if not context:
            return self._uni.copy()
        out = self._backoffs.get(context, 0.0) + self.logdist_id(context[1:])
        child = self._children.get(context)
        if child is not None:
            out[child[0]] = child[1]
        return out

    def score_ids(self, ids):
        """log10 probability of the id sequence followed by ``</s>``."""
        total = 0.0
        history = []
        for w in list(ids) + [EOS_ID]:
            total += self.logprob_id(self.context(history), w)
            history.append(w)
        return float(total)

    def sentence_logprob(self, sentence):
        return sentence_logprob(self, sentence)

    def next_token_logdist(self, history):
        return next_token_logdist(self, history)

    def next_token_dist(self, history):
        return next_token_dist(self, history)


def train(corpus, order=2, smoothing=None):
    """Estimate an interpolated backoff n-gram model from tokenized sentences.

    Args:
        corpus: list of token lists; every sentence must be nonempty.
        order: n-gram order, default 2.
        smoothing: a :class:`Smoothing`; Witten-Bell when ``None``.

    Returns:
        NgramModel. Training is deterministic: the vocabulary is sorted and
        all tables are built in sorted key order.
    """
    smoothing = smoothing or Smoothing()
    if not corpus:
        raise ValueError("empty training corpus")
    if order < 1:
        raise ValueError("invalid order")
    for i, sent in enumerate(corpus):
        if len(sent) == 0:
            raise ValueError(f"empty sentence at corpus index {i}")

    vocab = Vocabulary(sorted({tok for sent in corpus for tok in sent} - set(RESERVED)))
    n_pred = len(vocab) - 1

    counts = [Counter() for _ in range(order)]
    for sent in corpus:
        seq = [BOS_ID] + vocab.encode(sent) + [EOS_ID]
        for i in range(1, len(seq)):
            for m in range(1, order + 1):
                j = i - m + 1
                if j < 0:
                    break
                counts[m - 1][tuple(seq[j:i + 1])] += 1
    n_tokens = sum(counts[0].values())

    if smoothing.method == "uniform":
        lp = math.log10(1.0 / n_pred)
        uni = {(w,): lp for w in range(1, len(vocab))}
        uni[(BOS_ID,)] = ARPA_LOG_ZERO
        return NgramModel(order, vocab, [uni], {}, n_tokens)

    def beta(total, types):
        if smoothing.method == "witten_bell":
            return float(types)
        return smoothing.k * n_pred

    # Unigrams interpolate with the uniform distribution over V.
    probs = {}
    b0 = beta(n_tokens, len(counts[0]))
    for w in range(1, len(vocab)):
        probs[(w,)] = (counts[0].get((w,), 0) + b0 / n_pred) / (n_tokens + b0)
    logprobs = [{k: math.log10(v) for k, v in probs.items()}]
    logprobs[0][(BOS_ID,)] = ARPA_LOG_ZERO
    backoffs = {}

    for m in range(2, order + 1):
        totals, types = Counter(), Counter()
        for ngram in sorted(counts[m - 1]):
            totals[ngram[:-1]] += counts[m - 1][ngram]
            types[ngram[:-1]] += 1
        level = {}
        for ngram in sorted(counts[m - 1]):
            ctx = ngram[:-1]
            c_h = totals[ctx]
            b = beta(c_h, types[ctx])
            level[ngram] = (counts[m - 1][ngram] + b * probs[ngram[1:]]) / (c_h + b)
        for ctx in sorted(totals):
            b = beta(totals[ctx], types[ctx])
            backoffs[ctx] = math.log10(b / (totals[ctx] + b))
        probs = level
        logprobs.append({k: math.log10(v) for k, v in level.items()})

    model = NgramModel(order, vocab, logprobs, backoffs, n_tokens)
    logger.debug("trained %r on %d tokens", model, n_tokens)
    return model


def sentence_logprob(model, sentence):
    """log10 probability of ``sentence`` including the ``</s>`` transition.

    Unknown tokens are scored as ``<unk>``, so the result is always finite.
    """
    if len(sentence) == 0:
        raise ValueError("empty sentence")
    return model.score_ids(model.vocab.encode(sentence))


def next_token_logdist(model, history):
    """log10 p(. | history) over ``model.vocab`` ids; the ``<s>`` entry is -inf."""
    return model.logdist_id(model.context(model.vocab.encode(history)))


def next_token_dist(model, history):
    """Probability distribution over ``model.vocab`` ids following ``history``.

    ``history`` may be empty. The ``<s>`` slot is always 0; every other id has
    strictly positive probability and the vector sums to 1.
    """
    return np.power(10.0, next_token_logdist(model, history))


def _fmt(x):
    return repr(float(x))


def save_arpa(model, path=None):
    """Serialize ``model`` as ARPA text; also write it to ``path`` if given."""
    lines = ["", "\\data\\"]
    for m, table in enumerate(model.logprobs, start=1):
        lines.append(f"ngram {m}={len(table)}")
    vocab = model.vocab
    for m, table in enumerate(model.logprobs, start=1):
        lines.append("")
        lines.append(f"\\{m}-grams:")
        for ngram in sorted(table):
            words = " ".join(vocab.token(i) for i in ngram)
            row = f"{_fmt(table[ngram])}\t{words}"
            if ngram in model.backoffs:
                row += f"\t{_fmt(model.backoffs[ngram])}"
            lines.append(row)
    lines.append("")
    lines.append("\\end\\")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    return text


def load_arpa(source):
    """Parse ARPA text (any string with a newline) or a file path.

    Raises:
        ArpaParseError: malformed headers, counts or entries, or a file that
            ends before ``\\end\\``. No partial model is ever returned.
    """
    if isinstance(source, str) and "\n" in source:
        text = source
    else:
        with open(source, encoding="utf-8") as f:
            text = f.read()
    lines = text.splitlines()

    i = 0
    while i < len(lines) and lines[i].strip() != "\\data\\":
        i += 1
    if i == len(lines):
        raise ArpaParseError(1, "missing \\data\\ header")
    i += 1

    declared = {}
    while i < len(lines):
        line = lines[i].strip()
        if not line:
            i += 1
            if declared:
                break
            continue
        if not line.startswith("ngram "):
            break
        try:
            n, cnt = line[len("ngram "):].split("=")
            n, cnt = int(n), int(cnt)
        except ValueError:
            raise ArpaParseError(i + 1, f"bad count line {line!r}") from None
        if n != len(declared) + 1 or cnt < 0:
            raise ArpaParseError(i + 1, f"unexpected count line {line!r}")
        declared[n] = cnt
        i += 1
    if not declared:
        raise ArpaParseError(i + 1, "no ngram counts declared")

    raw = {}
    current = None
    ended = False
    while i < len(lines):
        line = lines[i].strip()
        lineno = i + 1
        i += 1
        if not line:
            continue
        if line == "\\end\\":
            ended = True
            break
        if line.startswith("\\") and line.endswith("-grams:"):
            if current is not None and len(raw[current]) != declared[current]:
                raise ArpaParseError(
                    lineno, f"{current}-gram section has {len(raw[current])} entries, "
                    f"{declared[current]} declared")
            try:
                n = int(line[1:-len("-grams:")])
            except ValueError:
                raise ArpaParseError(lineno, f"bad section header {line!r}") from None
            if n != (current or 0) + 1 or n not in declared:
                raise ArpaParseError(lineno, f"unexpected section header {line!r}")
            current = n
            raw[n] = []
            continue
        if current is None:
            raise ArpaParseError(lineno, f"entry outside any section: {line!r}")
        parts = line.split()
        if len(parts) not in (current + 1, current + 2):
            raise ArpaParseError(lineno, f"expected {current}-gram entry, got {line!r}")
        try:
            lp = float(parts[0])
            bow = float(parts[current + 1]) if len(parts) == current + 2 else None
        except ValueError:
            raise ArpaParseError(lineno, f"non-numeric value in {line!r}") from None
        raw[current].append((lineno, lp, tuple(parts[1:current + 1]), bow))

    if not ended:
        raise ArpaParseError(len(lines) + 1, "unexpected end of file before \\end\\")
    if current is None:
        raise ArpaParseError(len(lines), "no n-gram sections")
    if len(raw[current]) != declared[current]:
        raise ArpaParseError(
            len(lines), f"{current}-gram section has {len(raw[current])} entries, "
            f"{declared[current]} declared")
    if set(raw) != set(declared):
        raise ArpaParseError(len(lines), "missing n-gram sections")

    vocab = Vocabulary(words[0] for _, _, words, _ in raw[1])
    logprobs = [{} for _ in declared]
    backoffs = {}
    for n in sorted(raw):
        for lineno, lp, words, bow in raw[n]:
            if n > 1:
                missing = [w for w in words if w not in vocab]
                if missing:
                    raise ArpaParseError(lineno, f"token {missing[0]!r} not in unigrams")
            key = tuple(vocab.index(w) for w in words)
            logprobs[n - 1][key] = lp
            if bow is not None:
                backoffs[key] = bow
    for w in (EOS_ID, UNK_ID):
        if (w,) not in logprobs[0]:
            logger.warning("ARPA model lacks %s; assigning log10 p = %g", vocab.token(w), ARPA_LOG_ZERO)
            logprobs[0][(w,)] = ARPA_LOG_ZERO
    logprobs[0].setdefault((BOS_ID,), ARPA_LOG_ZERO)
    return NgramModel(len(declared), vocab, logprobs, backoffs)
