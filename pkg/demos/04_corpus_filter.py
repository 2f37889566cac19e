"""
Cleaning a parallel corpus
==========================

A generated corpus hides 50 violations of each filter rule among 750 clean
pairs. The pipeline should find exactly those, and running it again on its
own output should change nothing.

Run with ``python demos/04_corpus_filter.py``.
"""
from bidecode.corpus_filter import FilterConfig, LanguageIdentifier, run_pipeline
from bidecode.synthetic import make_planted_filter_corpus

corpus = make_planted_filter_corpus(seed=0)
print("a clean pair:   ", corpus.source[0], "|||", corpus.target[0])

# The language identifier learns character trigrams from seed text.
langid = LanguageIdentifier.train(corpus.seeds)
print("detected:", langid.detect(corpus.source[0]), langid.detect(corpus.target[0]),
      langid.detect("42 % , 17 !"))

config = FilterConfig(source_lang="ka", target_lang="ro")
kept, report = run_pipeline(corpus.source, corpus.target, config, langid)
print(report.to_json())
print("planted:", corpus.planted)

kept2, report2 = run_pipeline([p.raw_source for p in kept], [p.raw_target for p in kept],
                              config, langid)
print("second pass rejects", sum(report2.rejected.values()), "pairs")
