"""Adaptive multi-domain ensemble decoding with Bayesian Interpolation."""
from .bi_core import (
    ConfigurationError,
    EnsembleSpec,
    LambdaMatrix,
    combine,
    direct_posterior,
    lambda_matrix,
    posterior_step,
    step_weights,
    task_prior,
)
from .decoder import Hypothesis, WeightTrace, beam_search, decode_corpus, trace_to_csv
from .evaluation import BleuResult, bleu
from .ngram_lm import NgramModel, Smoothing, Vocabulary, load_arpa, save_arpa, train

__version__ = "0.1.0"
