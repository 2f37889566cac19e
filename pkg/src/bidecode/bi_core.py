"""Bayesian Interpolation of domain-specific sequence models.

The ensemble probability of the next token is::

    p(y_i | h_i, x) = sum_k p_k(y_i | h_i, x) * sum_t p(t | h_i, x) * lam[k, t]

with a K x T matrix ``lam`` whose columns each sum to one and a task
posterior that starts from an LM-based prior ``p(t | x)`` and is updated
after each emitted token by the likelihood ``sum_k p_k(y_{i-1}) lam[k, t]``.

Priors and lambda estimates come from source-side n-gram LMs ``G_t``::

    p(t | x) = G_t(x)^alpha / sum_t' G_t'(x)^alpha
    lam[k, t] = Gbar[k, t]^alpha / sum_k' Gbar[k', t]^alpha
    Gbar[k, t] = sum over x in corpus_t of G_k(x)

Everything is done in natural-log space; sentence probabilities are
combined with log-sum-exp so long sentences do not underflow.
"""
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import logsumexp, softmax

from .ngram_lm import LN10

PRIOR_MODES = ("uniform", "lm")
LAMBDA_MODES = ("identity", "estimated", "explicit")
STRATEGIES = ("single", "uniform", "fixed", "bi")
COMBINATIONS = ("prob", "logprob")


class ConfigurationError(ValueError):
    """Inconsistent ensemble configuration."""


@dataclass(frozen=True)
class LambdaMatrix:
    """K x T task-conditional model weights; column ``t`` is a distribution over models."""

    values: np.ndarray
    domains: tuple = None
    tasks: tuple = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("lambda matrix must be 2-dimensional")
        if np.any(vals < 0):
            raise ValueError("lambda entries must be non-negative")
        if not np.allclose(vals.sum(axis=0), 1.0, rtol=0, atol=1e-9):
            raise ValueError("every lambda column must sum to 1")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        k, t = vals.shape
        if self.domains is None:
            object.__setattr__(self, "domains", tuple(f"model{i}" for i in range(k)))
        if self.tasks is None:
            object.__setattr__(self, "tasks", tuple(f"task{i}" for i in range(t)))
        if len(self.domains) != k or len(self.tasks) != t:
            raise ValueError("domain/task names do not match the matrix shape")

    @property
    def shape(self):
        return self.values.shape

    @classmethod
    def identity(cls, k, domains=None, tasks=None):
        return cls(np.eye(k), domains and tuple(domains), tasks and tuple(tasks))

    def to_json(self):
        """Row-major JSON: ``{"domains": [...], "tasks": [...], "values": [[...]]}``."""
        return json.dumps({
            "domains": list(self.domains),
            "tasks": list(self.tasks),
            "values": self.values.tolist(),
        })

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        return cls(np.array(obj["values"], dtype=float),
                   tuple(obj["domains"]), tuple(obj["tasks"]))


def posterior_to_json(posterior, tasks):
    return json.dumps({t: float(p) for t, p in zip(tasks, posterior)})


def _lm_logprob(lm, sentence, length_norm):
    lp = lm.sentence_logprob(sentence) * LN10
    if length_norm:
        lp /= len(sentence) + 1
    return lp


def task_prior(classifier_lms, x, alpha, n_tasks=None, length_norm=False):
    """Task prior ``p(t | x)`` from source-side LM scores.

    Computed as ``softmax(alpha * ln G_t(x))``. With ``alpha == 0`` this is
    exactly ``1/T``.

    Args:
        classifier_lms: T n-gram models, one per task.
        x: source token sequence.
        alpha: smoothing exponent >= 0.
        n_tasks: expected T, checked against ``len(classifier_lms)``.
        length_norm: divide each log G_t(x) by the number of scored tokens.
    """
    if n_tasks is not None and len(classifier_lms) != n_tasks:
        raise ConfigurationError(
            f"{len(classifier_lms)} classifier LMs for {n_tasks} tasks")
    if not classifier_lms:
        raise ConfigurationError("at least one classifier LM is required")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    logs = np.array([_lm_logprob(lm, x, length_norm) for lm in classifier_lms])
    return softmax(alpha * logs)


def corpus_log_mass(lm, corpus, length_norm=False):
    """ln sum_x G(x) over ``corpus`` via log-sum-exp."""
    return logsumexp([_lm_logprob(lm, x, length_norm) for x in corpus])


def lambda_matrix(classifier_lms, task_corpora, alpha, domains=None, tasks=None,
                  length_norm=False):
    """Estimate lambda from per-task corpora scored by every model's LM.

    Returns:
        LambdaMatrix of shape (K, T) with ``lam[:, t] = softmax(alpha * ln Gbar[:, t])``.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    tasks = tuple(tasks) if tasks is not None else tuple(f"task{i}" for i in range(len(task_corpora)))
    for name, corpus in zip(tasks, task_corpora):
        if not corpus:
            raise ValueError(f"empty task corpus for task {name!r}")
    log_gbar = np.array([[corpus_log_mass(lm, corpus, length_norm) for corpus in task_corpora]
                         for lm in classifier_lms])
    values = softmax(alpha * log_gbar, axis=0)
    return LambdaMatrix(values, domains and tuple(domains), tasks)


def _lam(lam):
    return lam.values if isinstance(lam, LambdaMatrix) else np.asarray(lam, dtype=float)


def task_likelihood(model_probs, lam):
    """``sum_k p_k * lam[k, t]`` for each task t."""
    probs = np.asarray(model_probs, dtype=float)
    vals = _lam(lam)
    if probs.shape != (vals.shape[0],):
        raise ValueError(f"expected {vals.shape[0]} model probabilities, got shape {probs.shape}")
    if np.any(probs <= 0) or np.any(probs > 1):
        raise ValueError("model probabilities must lie in (0, 1]; scorers must smooth")
    return probs @ vals


def posterior_step(prev, last_step_model_probs, lam):
    """One Bayes update of the task posterior after an emitted token.

    Args:
        prev: length-T posterior before the token.
        last_step_model_probs: length-K probabilities each model gave the
            emitted token.
        lam: LambdaMatrix or K x T array.

    Returns:
        np.ndarray, ``prev[t] * lik[t]`` renormalized, computed in log space.
    """
    prev = np.asarray(prev, dtype=float)
    lik = task_likelihood(last_step_model_probs, lam)
    if prev.shape != lik.shape:
        raise ValueError("posterior and lambda dimensions disagree")
    with np.errstate(divide="ignore"):
        log_post = np.log(prev) + np.log(lik)
    return np.exp(log_post - logsumexp(log_post))


def direct_posterior(prior, model_prob_steps, lam):
    """One-shot posterior ``p(t | h, x) ~ p(t | x) * prod_j lik_j[t]``.

    Equivalent to chaining :func:`posterior_step` over ``model_prob_steps``.
    """
    prior = np.asarray(prior, dtype=float)
    with np.errstate(divide="ignore"):
        log_post = np.log(prior)
        for probs in model_prob_steps:
            log_post = log_post + np.log(task_likelihood(probs, lam))
    return np.exp(log_post - logsumexp(log_post))


def step_weights(posterior, lam):
    """Per-model weights ``W_k = sum_t posterior[t] * lam[k, t]``."""
    vals = _lam(lam)
    posterior = np.asarray(posterior, dtype=float)
    if posterior.shape != (vals.shape[1],):
        raise ValueError("posterior and lambda dimensions disagree")
    return vals @ posterior


def combine(step_dists, weights):
    """Mixture ``sum_k weights[k] * step_dists[k]`` of K distributions."""
    dists = np.asarray(step_dists, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if dists.ndim != 2:
        raise ValueError("step_dists must be K distributions of equal length")
    if weights.shape != (dists.shape[0],):
        raise ValueError(f"{weights.shape} weights for {dists.shape[0]} distributions")
    return weights @ dists


def combine_log_linear(step_dists, weights):
    """Renormalized weighted geometric mean, i.e. averaging log-probabilities."""
    dists = np.asarray(step_dists, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (dists.shape[0],):
        raise ValueError(f"{weights.shape} weights for {dists.shape[0]} distributions")
    with np.errstate(divide="ignore"):
        logs = np.log(dists)
    mask = np.all(dists > 0, axis=0)
    out = np.zeros(dists.shape[1])
    mixed = weights @ logs[:, mask]
    out[mask] = np.exp(mixed - logsumexp(mixed))
    return out


@dataclass
class EnsembleSpec:
    """K scorers plus everything needed to weight them at each step.

    Attributes:
        scorers: K objects following the scorer protocol of
            :mod:`bidecode.scorers`, all sharing one output vocabulary.
        domains: K domain names.
        tasks: T task names; defaults to ``domains`` (T = K).
        alpha: smoothing exponent for the LM prior and lambda estimate.
        strategy: ``single``, ``uniform``, ``fixed`` or ``bi``.
        lambda_mode: ``identity``, ``estimated`` or ``explicit``; when
            ``None`` it is ``estimated`` if task corpora are given and
            ``identity`` otherwise.
        lambda_values: K x T array for ``explicit``.
        task_prior_mode: ``uniform``, ``lm``, or an explicit length-T vector.
        classifier_lms: source-side LMs, one per task (and per model when
            estimating lambda).
        task_corpora: T tokenized corpora for lambda estimation.
        selected: model index used by the ``single`` strategy.
        combination: ``prob`` (mixture) or ``logprob`` (log-linear average).
        length_norm_prior: per-token normalization of LM scores in the prior
            and the lambda estimate.
    """

    scorers: list
    domains: tuple = None
    tasks: tuple = None
    alpha: float = 0.5
    strategy: str = "bi"
    lambda_mode: str = None
    lambda_values: np.ndarray = None
    task_prior_mode: object = "uniform"
    classifier_lms: list = None
    task_corpora: list = None
    selected: int = 0
    combination: str = "prob"
    length_norm_prior: bool = False
    _prior_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        k = len(self.scorers)
        if k < 1:
            raise ConfigurationError("an ensemble needs at least one scorer")
        self.domains = tuple(self.domains) if self.domains else tuple(f"model{i}" for i in range(k))
        if len(self.domains) != k:
            raise ConfigurationError(f"{len(self.domains)} domain names for {k} scorers")
        if len(set(self.domains)) != k:
            raise ConfigurationError("domain names must be unique")
        if self.tasks:
            self.tasks = tuple(self.tasks)
        elif self.lambda_values is not None and np.shape(self.lambda_values)[-1] != k:
            self.tasks = tuple(f"task{i}" for i in range(np.shape(self.lambda_values)[-1]))
        else:
            self.tasks = self.domains
        if self.alpha < 0:
            raise ConfigurationError("alpha must be >= 0")
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"unknown strategy {self.strategy!r}")
        if self.combination not in COMBINATIONS:
            raise ConfigurationError(f"unknown combination {self.combination!r}")
        if not 0 <= self.selected < k:
            raise ConfigurationError(f"selected model {self.selected} out of range")
        vocab = self.scorers[0].vocab
        for s in self.scorers[1:]:
            if s.vocab != vocab:
                raise ConfigurationError("all scorers must share one output vocabulary")
        if self.lambda_mode is None:
            self.lambda_mode = "estimated" if self.task_corpora else "identity"
        if self.lambda_mode not in LAMBDA_MODES:
            raise ConfigurationError(f"unknown lambda mode {self.lambda_mode!r}")
        if self.lambda_mode == "estimated":
            if not self.task_corpora or len(self.task_corpora) != len(self.tasks):
                raise ConfigurationError("estimated lambda needs one corpus per task")
            if not self.classifier_lms or len(self.classifier_lms) != k:
                raise ConfigurationError("estimated lambda needs one classifier LM per model")
        if self.lambda_mode == "identity" and k != len(self.tasks):
            raise ConfigurationError("identity lambda requires T == K")
        if self.lambda_mode == "explicit":
            if self.lambda_values is None:
                raise ConfigurationError("explicit lambda mode needs lambda_values")
            # Validates shape, sign and column sums.
            try:
                lam = LambdaMatrix(np.asarray(self.lambda_values, dtype=float),
                                   self.domains, self.tasks)
            except ValueError as e:
                raise ConfigurationError(f"invalid lambda_values: {e}") from None
            self.__dict__["lam"] = lam
        if isinstance(self.task_prior_mode, str):
            if self.task_prior_mode not in PRIOR_MODES:
                raise ConfigurationError(f"unknown task prior mode {self.task_prior_mode!r}")
            if self.task_prior_mode == "lm" and (
                    not self.classifier_lms or len(self.classifier_lms) != len(self.tasks)):
                raise ConfigurationError("LM task prior needs one classifier LM per task")
        else:
            prior = np.asarray(self.task_prior_mode, dtype=float)
            if prior.shape != (len(self.tasks),) or np.any(prior < 0) or abs(prior.sum() - 1) > 1e-9:
                raise ConfigurationError("explicit task prior must be a length-T distribution")
            self.task_prior_mode = prior

    @property
    def k(self):
        return len(self.scorers)

    @property
    def t(self):
        return len(self.tasks)

    @property
    def vocab(self):
        return self.scorers[0].vocab

    @cached_property
    def lam(self):
        """The resolved :class:`LambdaMatrix` (estimated once, then cached)."""
        if self.lambda_mode == "identity":
            return LambdaMatrix.identity(self.k, self.domains, self.tasks)
        return lambda_matrix(self.classifier_lms, self.task_corpora, self.alpha,
                             self.domains, self.tasks, self.length_norm_prior)

    def prior(self, x):
        """Task prior for source sentence ``x``."""
        mode = self.task_prior_mode
        if isinstance(mode, np.ndarray):
            return mode.copy()
        if mode == "uniform":
            return np.full(self.t, 1.0 / self.t)
        key = tuple(x)
        if key not in self._prior_cache:
            self._prior_cache[key] = task_prior(self.classifier_lms, x, self.alpha, self.t,
                                                self.length_norm_prior)
        return self._prior_cache[key].copy()

    def weights(self, posterior):
        """Model weights for one step under the configured strategy."""
        if self.strategy == "single":
            w = np.zeros(self.k)
            w[self.selected] = 1.0
            return w
        if self.strategy == "uniform":
            return np.full(self.k, 1.0 / self.k)
        return step_weights(posterior, self.lam)

    @property
    def adaptive(self):
        return self.strategy == "bi"

    def mix(self, step_dists, weights):
        if self.combination == "logprob":
            return combine_log_linear(step_dists, weights)
        return combine(step_dists, weights)
