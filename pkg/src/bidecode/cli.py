"""Command-line entry point: ``bidecode <command> ...``.

Exit codes: 0 success, 1 data error, 2 usage or configuration error.

Experiment config (JSON; relative paths resolve against the config file)::

    {
      "domains": [
        {"name": "health",
         "scorer": {"type": "ngram", "lm": "health.tgt.arpa"},
         "classifier_lm": "health.src.arpa",
         "dev_corpus": "health.dev.src"},
        {"name": "bio",
         "scorer": {"type": "lexicon", "lexicon": "bio.lex.json",
                    "lm": "bio.tgt.arpa", "channel_weight": 0.95},
         "classifier_lm": "bio.src.arpa",
         "dev_corpus": "bio.dev.src"}
      ],
      "alpha": 0.5, "strategy": "bi", "lambda": "estimate",
      "task_prior": "lm", "beam": 4, "max_len": 256
    }

Scorer types: ``ngram`` (``lm``), ``lexicon`` (``lexicon``, ``lm``,
``channel_weight``) and ``precomputed`` (``path`` to scorer JSONL).
"""
import argparse
import json
import logging
import os
import sys

from . import ngram_lm
from .bi_core import ConfigurationError, EnsembleSpec, LambdaMatrix, lambda_matrix, task_prior
from .corpus_filter import FilterConfig, LanguageIdentifier, filter_files
from .decoder import decode_corpus, trace_to_csv
from .evaluation import bleu_files
from .scorers import LexiconScorer, NgramScorer, PrecomputedScorer, shared_vocabulary
from .tokenize import read_corpus, tokenize

logger = logging.getLogger("bidecode")

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _non_negative(text):
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


class ExperimentConfig:
    """Parsed and validated experiment config."""

    def __init__(self, path):
        self.path = path
        self.base = os.path.dirname(os.path.abspath(path))
        try:
            with open(path, encoding="utf-8") as f:
                self.raw = json.load(f)
        except OSError as e:
            raise ConfigurationError(f"{path}: cannot read config ({e.strerror})") from None
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"{path}: invalid JSON ({e})") from None
        domains = self.raw.get("domains")
        if not isinstance(domains, list) or not domains:
            raise ConfigurationError(f"{path}: field 'domains' must be a nonempty list")
        names = [d.get("name") for d in domains]
        if any(not isinstance(n, str) for n in names):
            raise ConfigurationError(f"{path}: every domain needs a string 'name'")
        if len(set(names)) != len(names):
            raise ConfigurationError(f"{path}: field 'domains[].name' must be unique")
        self.domains = domains
        self.names = tuple(names)
        alpha = self.raw.get("alpha", 0.5)
        if not isinstance(alpha, (int, float)) or alpha < 0:
            raise ConfigurationError(f"{path}: field 'alpha' must be a number >= 0")
        for i, d in enumerate(domains):
            for key in ("classifier_lm", "dev_corpus"):
                if key in d:
                    self.file(d[key], f"domains[{i}].{key}")
            scorer = d.get("scorer")
            if not isinstance(scorer, dict) or "type" not in scorer:
                raise ConfigurationError(f"{path}: field 'domains[{i}].scorer' needs a 'type'")
            for key in ("lm", "lexicon", "path"):
                if key in scorer:
                    self.file(scorer[key], f"domains[{i}].scorer.{key}")

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def file(self, rel, field):
        full = rel if os.path.isabs(rel) else os.path.join(self.base, rel)
        if not os.path.exists(full):
            raise ConfigurationError(f"{self.path}: field '{field}' names missing file {full}")
        return full

    def classifier_lms(self):
        if not all("classifier_lm" in d for d in self.domains):
            return None
        return [ngram_lm.load_arpa(self.file(d["classifier_lm"], f"domains[{i}].classifier_lm"))
                for i, d in enumerate(self.domains)]

    def dev_corpora(self):
        if not all("dev_corpus" in d for d in self.domains):
            return None
        return [read_corpus(self.file(d["dev_corpus"], f"domains[{i}].dev_corpus"))
                for i, d in enumerate(self.domains)]

    def scorers(self):
        loaded = []
        for i, d in enumerate(self.domains):
            sc = d["scorer"]
            kind = sc["type"]
            where = f"domains[{i}].scorer"
            if kind == "ngram":
                loaded.append(("ngram", ngram_lm.load_arpa(self.file(sc["lm"], f"{where}.lm"))))
            elif kind == "lexicon":
                with open(self.file(sc["lexicon"], f"{where}.lexicon"), encoding="utf-8") as f:
                    lex = json.load(f)
                lm = ngram_lm.load_arpa(self.file(sc["lm"], f"{where}.lm"))
                loaded.append(("lexicon", (lex, lm, sc.get("channel_weight", 0.95))))
            elif kind == "precomputed":
                with open(self.file(sc["path"], f"{where}.path"), encoding="utf-8") as f:
                    records = [json.loads(line) for line in f if line.strip()]
                loaded.append(("precomputed", records))
            else:
                raise ConfigurationError(f"{self.path}: field '{where}.type' has unknown value {kind!r}")

        tokens = []
        for kind, obj in loaded:
            if kind == "ngram":
                tokens.append(obj.vocab)
            elif kind == "lexicon":
                tokens.append(obj[1].vocab)
                tokens.append([t for e in obj[0].values() for t in e])
            else:
                tokens.append([d["token"] for r in obj for step in r["steps"] for d in step])
        vocab = shared_vocabulary(*tokens)

        out = []
        for kind, obj in loaded:
            if kind == "ngram":
                out.append(NgramScorer(obj, vocab))
            elif kind == "lexicon":
                out.append(LexiconScorer(obj[0], obj[1], vocab, obj[2]))
            else:
                out.append(PrecomputedScorer(obj, vocab))
        return out


def _build_spec(cfg, args):
    alpha = args.alpha if args.alpha is not None else cfg.get("alpha", 0.5)
    strategy = args.strategy or cfg.get("strategy", "bi")
    lam_choice = args.lam or cfg.get("lambda", None)
    classifier_lms = cfg.classifier_lms()
    corpora = None
    lam_values = None
    if lam_choice is None:
        lam_mode = None
        corpora = cfg.dev_corpora()
    elif lam_choice == "identity":
        lam_mode = "identity"
    elif lam_choice == "estimate":
        lam_mode = "estimated"
        corpora = cfg.dev_corpora()
        if corpora is None:
            raise ConfigurationError(f"{cfg.path}: lambda 'estimate' needs 'dev_corpus' for every domain")
    elif lam_choice == "file":
        if args.lambda_file:
            lam_file = args.lambda_file
        elif cfg.get("lambda_file"):
            lam_file = cfg.file(cfg.get("lambda_file"), "lambda_file")
        else:
            raise ConfigurationError("--lambda file needs --lambda-file")
        with open(lam_file, encoding="utf-8") as f:
            lam_values = LambdaMatrix.from_json(f.read()).values
        lam_mode = "explicit"
    else:
        raise ConfigurationError(f"{cfg.path}: field 'lambda' has unknown value {lam_choice!r}")
    prior = cfg.get("task_prior", "lm" if classifier_lms else "uniform")
    selected = cfg.get("selected", 0)
    if isinstance(selected, str):
        if selected not in cfg.names:
            raise ConfigurationError(f"{cfg.path}: field 'selected' names unknown domain {selected!r}")
        selected = cfg.names.index(selected)
    return EnsembleSpec(
        scorers=cfg.scorers(), domains=cfg.names, alpha=alpha, strategy=strategy,
        lambda_mode=lam_mode, lambda_values=lam_values, task_prior_mode=prior,
        classifier_lms=classifier_lms, task_corpora=corpora, selected=selected,
        combination=args.combination or cfg.get("combination", "prob"),
        length_norm_prior=cfg.get("length_norm_prior", False))


def cmd_filter(args):
    config = FilterConfig(
        max_tokens=args.max_tokens, min_tokens=args.min_tokens, max_ratio=args.max_ratio,
        repeat_fraction=args.repeat_fraction, source_lang=args.src_lang, target_lang=args.tgt_lang)
    langid = None
    if args.lang_seed:
        seeds = {}
        for item in args.lang_seed:
            code, _, path = item.partition("=")
            if not path:
                raise UsageError(f"--lang-seed expects CODE=PATH, got {item!r}")
            with open(path, encoding="utf-8") as f:
                seeds[code] = f.read().splitlines()
        if not (args.src_lang and args.tgt_lang):
            raise UsageError("language filtering needs --src-lang and --tgt-lang")
        langid = LanguageIdentifier.train(seeds)
    with open(args.src, encoding="utf-8") as f:
        n_src = sum(1 for _ in f)
    with open(args.tgt, encoding="utf-8") as f:
        n_tgt = sum(1 for _ in f)
    if n_src != n_tgt:
        raise UsageError(f"line-count mismatch: {args.src} has {n_src} lines, {args.tgt} has {n_tgt}")
    report = filter_files(args.src, args.tgt, f"{args.out_prefix}.src", f"{args.out_prefix}.tgt",
                          config, langid)
    text = report.to_json()
    with open(f"{args.out_prefix}.report.json", "w", encoding="utf-8") as f:
        f.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_lm_train(args):
    corpus = read_corpus(args.corpus)
    if not corpus:
        raise DataError("empty training corpus")
    smoothing = ngram_lm.Smoothing(args.smoothing, args.k)
    model = ngram_lm.train(corpus, args.order, smoothing)
    ngram_lm.save_arpa(model, args.out)
    logger.info("wrote %r to %s", model, args.out)
    return EXIT_OK


def cmd_lm_score(args):
    model = ngram_lm.load_arpa(args.model)
    total = 0.0
    with open(args.corpus, encoding="utf-8") as f:
        for line in f:
            toks = tokenize(line)
            if not toks:
                continue
            lp = ngram_lm.sentence_logprob(model, toks)
            total += lp
            print(repr(lp))
    print(f"total\t{total!r}", file=sys.stderr)
    return EXIT_OK


def cmd_classify(args):
    cfg = ExperimentConfig(args.config)
    lms = cfg.classifier_lms()
    if lms is None:
        raise ConfigurationError(f"{cfg.path}: every domain needs 'classifier_lm' to classify")
    alpha = args.alpha if args.alpha is not None else cfg.get("alpha", 0.5)
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        with open(args.corpus, encoding="utf-8") as f:
            for line in f:
                toks = tokenize(line)
                if not toks:
                    out.write(json.dumps(None) + "\n")
                    continue
                post = task_prior(lms, toks, alpha, len(cfg.names))
                out.write(json.dumps({n: float(p) for n, p in zip(cfg.names, post)}) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_lambda(args):
    cfg = ExperimentConfig(args.config)
    lms, corpora = cfg.classifier_lms(), cfg.dev_corpora()
    if lms is None or corpora is None:
        raise ConfigurationError(f"{cfg.path}: every domain needs 'classifier_lm' and 'dev_corpus'")
    alpha = args.alpha if args.alpha is not None else cfg.get("alpha", 0.5)
    lam = lambda_matrix(lms, corpora, alpha, cfg.names, cfg.names)
    text = lam.to_json()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_decode(args):
    cfg = ExperimentConfig(args.config)
    spec = _build_spec(cfg, args)
    beam = args.beam or cfg.get("beam", 4)
    max_len = args.max_len or cfg.get("max_len", 256)
    length_norm = args.length_norm or cfg.get("length_norm", False)
    with open(args.input, encoding="utf-8") as f:
        sentences = [tokenize(line) for line in f]
    results = decode_corpus(spec, sentences, beam, max_len, length_norm, args.workers)
    if args.trace:
        os.makedirs(args.trace, exist_ok=True)
    n_err = 0
    with open(args.output, "w", encoding="utf-8") as out:
        for r in results:
            if not r.ok:
                n_err += 1
                logger.warning("line %d: %s", r.index + 1, r.error)
                out.write("\n")
                continue
            out.write(" ".join(r.hypothesis.words(spec.vocab)) + "\n")
            if args.trace:
                with open(os.path.join(args.trace, f"{r.index:06d}.csv"), "w", encoding="utf-8") as f:
                    f.write(trace_to_csv(r.trace))
    logger.info("decoded %d sentences, %d skipped", len(results) - n_err, n_err)
    return EXIT_OK


def cmd_bleu(args):
    result = bleu_files(args.hyp, args.ref, cased=not args.uncased)
    print(result.to_json())
    return EXIT_OK


def build_parser():
    p = _Parser(prog="bidecode", description="Adaptive multi-domain ensemble decoding toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("filter", help="filter a parallel corpus")
    f.add_argument("src")
    f.add_argument("tgt")
    f.add_argument("--out-prefix", required=True)
    f.add_argument("--max-tokens", type=int, default=120)
    f.add_argument("--min-tokens", type=int, default=3)
    f.add_argument("--max-ratio", type=float, default=3.5)
    f.add_argument("--repeat-fraction", type=float, default=0.30)
    f.add_argument("--src-lang")
    f.add_argument("--tgt-lang")
    f.add_argument("--lang-seed", action="append", metavar="CODE=PATH",
                   help="seed text for the character n-gram language identifier")
    f.set_defaults(func=cmd_filter)

    t = sub.add_parser("lm-train", help="train an n-gram LM and write ARPA")
    t.add_argument("corpus")
    t.add_argument("--order", type=_positive_int, default=2)
    t.add_argument("--smoothing", choices=("witten_bell", "add_k", "uniform"), default="witten_bell")
    t.add_argument("--k", type=float, default=1.0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_lm_train)

    s = sub.add_parser("lm-score", help="print log10 probability per sentence")
    s.add_argument("model")
    s.add_argument("corpus")
    s.set_defaults(func=cmd_lm_score)

    c = sub.add_parser("classify", help="per-sentence task priors as JSON lines")
    c.add_argument("config")
    c.add_argument("corpus")
    c.add_argument("--alpha", type=_non_negative)
    c.add_argument("--output")
    c.set_defaults(func=cmd_classify)

    lam = sub.add_parser("lambda", help="estimate the lambda matrix from dev corpora")
    lam.add_argument("config")
    lam.add_argument("--alpha", type=_non_negative)
    lam.add_argument("--output")
    lam.set_defaults(func=cmd_lambda)

    d = sub.add_parser("decode", help="decode with an ensemble")
    d.add_argument("config")
    d.add_argument("input")
    d.add_argument("output")
    d.add_argument("--strategy", choices=("single", "uniform", "fixed", "bi"))
    d.add_argument("--alpha", type=_non_negative)
    d.add_argument("--beam", type=_positive_int)
    d.add_argument("--max-len", type=_positive_int)
    d.add_argument("--lambda", dest="lam", choices=("identity", "estimate", "file"))
    d.add_argument("--lambda-file")
    d.add_argument("--combination", choices=("prob", "logprob"))
    d.add_argument("--trace", metavar="DIR")
    d.add_argument("--length-norm", action="store_true")
    d.add_argument("--workers", type=_positive_int, default=1)
    d.set_defaults(func=cmd_decode)

    b = sub.add_parser("bleu", help="corpus BLEU as JSON")
    b.add_argument("hyp")
    b.add_argument("ref")
    b.add_argument("--uncased", action="store_true")
    b.set_defaults(func=cmd_bleu)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"bidecode: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as e:
        print(f"bidecode: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError, KeyError, OSError) as e:
        print(f"bidecode: data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
