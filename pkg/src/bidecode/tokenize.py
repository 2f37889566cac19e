"""Deterministic word tokenization shared by LM training and corpus filtering.

Punctuation is detached from words and the result is split on whitespace.
This stands in for a full Moses pipeline; it does no truecasing or
normalization beyond Unicode-aware punctuation splitting.
"""
import re

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize(line):
    """Split a raw line into word and punctuation tokens.

    >>> tokenize("p53-mediated apoptosis (in vitro).")
    ['p53', '-', 'mediated', 'apoptosis', '(', 'in', 'vitro', ')', '.']
    """
    return _TOKEN_RE.findall(line)


def read_corpus(path, encoding="utf-8"):
    """Read a one-sentence-per-line file into token lists, skipping blank lines."""
    corpus = []
    with open(path, encoding=encoding) as f:
        for line in f:
            toks = tokenize(line)
            if toks:
                corpus.append(toks)
    return corpus
