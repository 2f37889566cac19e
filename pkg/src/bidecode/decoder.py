"""Beam search over an ensemble of per-token scorers.

Each expansion mixes the K scorer distributions with the weights the
ensemble strategy prescribes for the hypothesis' current task posterior.
Under the ``bi`` strategy every hypothesis carries its own posterior, which
is updated with the probability each scorer gave the token it emitted.

Search details:

* scores are cumulative log10 probabilities;
* at each step the ``beam`` best continuing expansions survive, and the
  ``</s>`` expansion of every surviving parent is moved to a separate
  finished pool, so finished hypotheses never take beam slots;
* scores within ``TIE_DECIMALS`` decimals count as equal and ties go to the
  lexicographically smallest token-id sequence;
* without length normalization the search stops as soon as the best
  finished score is at least the best open score, which is exact because
  appending tokens never increases a score.
"""
import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bi_core import posterior_step
from .ngram_lm import BOS_ID, EOS_ID

logger = logging.getLogger(__name__)

TIE_DECIMALS = 10


@dataclass(frozen=True)
class TraceRow:
    token: int
    weights: np.ndarray
    posterior: np.ndarray


@dataclass(frozen=True)
class Hypothesis:
    """A (partial) output ``tokens`` with its cumulative log10 ``score``.

    ``posterior`` is the task posterior after the last token, ``rows`` the
    per-token weights and pre-emission posteriors.
    """

    tokens: tuple
    score: float
    posterior: np.ndarray
    finished: bool = False
    length_capped: bool = False
    rows: tuple = field(default=(), repr=False)

    def words(self, vocab):
        """Output tokens as strings, without ``</s>``."""
        ids = self.tokens[:-1] if self.finished else self.tokens
        return vocab.decode(ids)


@dataclass
class WeightTrace:
    """Per-step model weights and task posteriors along one hypothesis."""

    domains: tuple
    tasks: tuple
    tokens: list
    weights: np.ndarray
    posteriors: np.ndarray

    def __len__(self):
        return len(self.tokens)

    @classmethod
    def from_hypothesis(cls, hyp, spec):
        vocab = spec.vocab
        k, t = spec.k, spec.t
        return cls(
            tuple(spec.domains), tuple(spec.tasks),
            [vocab.token(r.token) for r in hyp.rows],
            np.array([r.weights for r in hyp.rows]).reshape(-1, k),
            np.array([r.posterior for r in hyp.rows]).reshape(-1, t),
        )


def _rank(score, n_tokens, length_norm):
    if length_norm and n_tokens:
        score = score / n_tokens
    return round(score, TIE_DECIMALS)


def _best(hyps, length_norm):
    return min(hyps, key=lambda h: (-_rank(h.score, len(h.tokens), length_norm), h.tokens))


def beam_search(spec, x, beam=4, max_len=256, length_norm=False):
    """Decode source ``x`` with the ensemble ``spec``.

    Args:
        spec: :class:`~bidecode.bi_core.EnsembleSpec`.
        x: source token sequence (strings).
        beam: number of open hypotheses kept per step.
        max_len: maximum number of emitted tokens, ``</s>`` included.
        length_norm: rank by score per token instead of raw score.

    Returns:
        (Hypothesis, WeightTrace) for the best finished hypothesis, or for
        the best open one with ``length_capped=True`` when nothing finished.
    """
    if beam < 1:
        raise ValueError("beam must be >= 1")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    x = tuple(x)
    n_vocab = len(spec.vocab)
    cont_ids = np.array([i for i in range(n_vocab) if i not in (BOS_ID, EOS_ID)], dtype=np.intp)
    lam = spec.lam if spec.strategy in ("fixed", "bi") else None

    open_hyps = [Hypothesis((), 0.0, spec.prior(x))]
    finished = []
    for _ in range(max_len):
        cands = []
        for hyp in open_hyps:
            dists = np.stack([s.dist(x, hyp.tokens) for s in spec.scorers])
            weights = spec.weights(hyp.posterior)
            with np.errstate(divide="ignore"):
                logp = np.log10(spec.mix(dists, weights))
            expand = (hyp, dists, weights, logp)
            # Zero-probability tokens are unreachable, never expanded.
            if logp[EOS_ID] > -np.inf:
                finished.append(_extend(expand, EOS_ID, spec, lam, finished=True))
            scores = hyp.score + logp[cont_ids]
            ranks = np.round(
                scores / (len(hyp.tokens) + 1) if length_norm else scores, TIE_DECIMALS)
            order = np.lexsort((cont_ids, -ranks))[:beam]
            for j in order:
                if scores[j] == -np.inf:
                    continue
                cands.append((-ranks[j], hyp.tokens + (int(cont_ids[j]),), expand))
        cands.sort(key=lambda c: (c[0], c[1]))
        open_hyps = [_extend(e, toks[-1], spec, lam) for _, toks, e in cands[:beam]]
        if not open_hyps:
            break
        if not length_norm and finished:
            best_open = max(h.score for h in open_hyps)
            if max(h.score for h in finished) >= best_open:
                break

    if finished:
        best = _best(finished, length_norm)
    else:
        best = _best(open_hyps, length_norm)
        best = Hypothesis(best.tokens, best.score, best.posterior, False, True, best.rows)
        logger.info("no hypothesis finished within %d tokens", max_len)
    return best, WeightTrace.from_hypothesis(best, spec)


def _extend(expand, tok, spec, lam, finished=False):
    hyp, dists, weights, logp = expand
    if spec.adaptive:
        posterior = posterior_step(hyp.posterior, dists[:, tok], lam)
    else:
        posterior = hyp.posterior
    row = TraceRow(tok, weights, hyp.posterior)
    return Hypothesis(hyp.tokens + (tok,), hyp.score + float(logp[tok]), posterior,
                      finished, False, hyp.rows + (row,))


@dataclass
class DecodeResult:
    index: int
    source: tuple
    hypothesis: Hypothesis = None
    trace: WeightTrace = None
    error: str = None

    @property
    def ok(self):
        return self.error is None


def decode_corpus(spec, sentences, beam=4, max_len=256, length_norm=False, workers=1):
    """Decode every sentence independently, preserving input order.

    Empty sentences and per-sentence failures are reported in
    ``DecodeResult.error`` instead of aborting the batch.
    """
    sentences = list(sentences)

    def run(item):
        i, x = item
        x = tuple(x)
        if not x:
            return DecodeResult(i, x, error="empty sentence")
        try:
            hyp, trace = beam_search(spec, x, beam, max_len, length_norm)
        except Exception as e:  # noqa: BLE001 - one bad sentence must not kill the batch
            logger.warning("sentence %d failed: %s", i, e)
            return DecodeResult(i, x, error=f"{type(e).__name__}: {e}")
        return DecodeResult(i, x, hyp, trace)

    items = list(enumerate(sentences))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, items))
    return [run(it) for it in items]


def trace_to_csv(trace):
    """CSV text with columns ``step, token, w:<domain>..., p:<task>...``."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["step", "token"] + [f"w:{d}" for d in trace.domains]
                    + [f"p:{t}" for t in trace.tasks])
    for i, tok in enumerate(trace.tokens):
        writer.writerow([i, tok] + [f"{v:.17g}" for v in trace.weights[i]]
                        + [f"{v:.17g}" for v in trace.posteriors[i]])
    return buf.getvalue()


def parse_trace_csv(text):
    """Inverse of :func:`trace_to_csv`."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if header[:2] != ["step", "token"]:
        raise ValueError("not a weight-trace CSV")
    domains = tuple(h[2:] for h in header if h.startswith("w:"))
    tasks = tuple(h[2:] for h in header if h.startswith("p:"))
    k = len(domains)
    weights = np.array([[float(v) for v in r[2:2 + k]] for r in body]).reshape(-1, k)
    posteriors = np.array([[float(v) for v in r[2 + k:]] for r in body]).reshape(-1, len(tasks))
    return WeightTrace(domains, tasks, [r[1] for r in body], weights, posteriors)
