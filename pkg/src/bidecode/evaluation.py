"""Corpus BLEU with 13a tokenization and exponential smoothing.

Follows the usual single-reference corpus BLEU: clipped 1-4-gram matches
summed over the corpus, geometric mean of the precisions and a brevity
penalty ``exp(1 - r/c)`` when the hypotheses are shorter than the
references. With ``smooth="exp"``, the n-th order with zero matches gets
precision ``1 / (2^j * total_n)`` where ``j`` counts the zero-match orders
seen so far. Orders with no n-grams at all in the hypotheses (every line
shorter than n) are dropped from the geometric mean.
"""
import json
import math
import re
from collections import Counter
from dataclasses import asdict, dataclass

MAX_ORDER = 4

_13A_RULES = [
    (re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])"), r" \1 "),
    (re.compile(r"([^0-9])([\.,])"), r"\1 \2 "),
    (re.compile(r"([\.,])([^0-9])"), r" \1 \2"),
    (re.compile(r"([0-9])(-)"), r"\1 \2 "),
]


def tokenize_13a(line):
    """Tokenize like mteval-v13a: split off punctuation and symbols."""
    line = line.replace("<skipped>", "").replace("-\n", "").replace("\n", " ")
    if "&" in line:
        line = (line.replace("&quot;", '"').replace("&amp;", "&")
                .replace("&lt;", "<").replace("&gt;", ">"))
    line = f" {line} "
    for pattern, repl in _13A_RULES:
        line = pattern.sub(repl, line)
    return line.split()


@dataclass
class BleuResult:
    score: float
    precisions: list
    bp: float
    hyp_len: int
    ref_len: int
    counts: list
    totals: list

    def to_json(self):
        return json.dumps(asdict(self))


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(hypotheses, references, cased=True, smooth="exp", tokenize=tokenize_13a):
    """Corpus BLEU of ``hypotheses`` against one reference each.

    Args:
        hypotheses, references: equal-length lists of detokenized strings.
        cased: when False both sides are lowercased first.
        smooth: ``"exp"`` or ``"none"``.
        tokenize: string -> token list.

    Returns:
        BleuResult; ``precisions`` are fractions in [0, 1] and ``score`` is
        on the 0-100 scale.
    """
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses but {len(references)} references")
    if not hypotheses:
        raise ValueError("empty corpus")
    if smooth not in ("exp", "none"):
        raise ValueError(f"unknown smoothing {smooth!r}")

    counts = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        if not cased:
            hyp, ref = hyp.lower(), ref.lower()
        h, r = tokenize(hyp), tokenize(ref)
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, MAX_ORDER + 1):
            hn, rn = _ngrams(h, n), _ngrams(r, n)
            counts[n - 1] += sum(min(c, rn[g]) for g, c in hn.items())
            totals[n - 1] += max(len(h) - n + 1, 0)

    precisions = [0.0] * MAX_ORDER
    smooth_denom = 1.0
    # Orders the hypotheses are too short for are left out of the mean.
    eff_order = 0
    for n in range(MAX_ORDER):
        if totals[n] == 0:
            break
        eff_order = n + 1
        if counts[n] == 0 and smooth == "exp":
            smooth_denom *= 2
            precisions[n] = 1.0 / (smooth_denom * totals[n])
        else:
            precisions[n] = counts[n] / totals[n]

    if hyp_len == 0:
        bp = 0.0
    elif hyp_len < ref_len:
        bp = math.exp(1.0 - ref_len / hyp_len)
    else:
        bp = 1.0

    used = precisions[:eff_order]
    if not used or min(used) <= 0 or bp == 0:
        score = 0.0
    else:
        score = 100.0 * bp * math.exp(sum(math.log(p) for p in used) / eff_order)
    return BleuResult(score, precisions, bp, hyp_len, ref_len, counts, totals)


def bleu_files(hyp_path, ref_path, cased=True):
    with open(hyp_path, encoding="utf-8") as f:
        hyps = f.read().splitlines()
    with open(ref_path, encoding="utf-8") as f:
        refs = f.read().splitlines()
    return bleu(hyps, refs, cased=cased)
