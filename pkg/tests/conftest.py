import hashlib
from contextlib import contextmanager

import numpy as np
import pytest

from bidecode.ngram_lm import BOS_ID, Vocabulary


class TableScorer:
    """History-dependent random scorer for oracle tests.

    Each (seed, source, history) gets its own Dirichlet draw, so the
    distribution genuinely depends on the prefix.
    """

    def __init__(self, vocab, seed, concentration=1.0):
        self.vocab = vocab
        self.seed = seed
        self.concentration = concentration
        self._cache = {}

    def dist(self, source, history):
        key = (tuple(source), tuple(history))
        if key not in self._cache:
            digest = hashlib.sha256(repr((self.seed, key)).encode()).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            vec = np.zeros(len(self.vocab))
            vec[1:] = rng.dirichlet(np.full(len(self.vocab) - 1, self.concentration))
            vec[1:] = np.maximum(vec[1:], 1e-12)
            vec /= vec.sum()
            vec[BOS_ID] = 0.0
            self._cache[key] = vec
        return self._cache[key]


@pytest.fixture
def small_vocab():
    return Vocabulary(["a", "b", "c"])


@pytest.fixture
def table_scorer_factory():
    return TableScorer


# Acceptance bookkeeping: one line per criterion in the terminal summary.
ACCEPTANCE = []


@contextmanager
def criterion(number, title):
    """Record PASS/FAIL for one acceptance criterion; ``box["detail"]`` is shown."""
    box = {"detail": ""}
    try:
        yield box
    except BaseException as e:
        msg = box["detail"] or f"{type(e).__name__}: {str(e).splitlines()[0] if str(e) else ''}"
        ACCEPTANCE.append((number, "FAIL", title, msg))
        raise
    ACCEPTANCE.append((number, "PASS", title, box["detail"]))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, status, title, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} -- {detail}")
