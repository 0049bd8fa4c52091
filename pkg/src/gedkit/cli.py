"""Batch command-line front-end.

Subcommands: corrupt, fit-lm, score, features, grid-search, fit-outlier,
score-outlier, gmm-gap, classify, diff, stats, kl, eval. All randomness flows
from --seed; identical invocations produce byte-identical data outputs (the
run manifest, written next to each output, is the only place a timestamp
appears). Logs go to stderr; stdout carries nothing but report tables.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import multiprocessing
import sys
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__, corruptor, edits, evaluate, formats, metrics, ngram
from .corpus import LabeledInstance, expand_pairs, read_samples
from .detectors import (
    classifier_fit,
    fit_outlier_detector,
    gmm_fit,
    grid_search_threshold,
    load_outlier_detector,
    permutation_importance,
    save_outlier_detector,
    surprisal_gap,
)
from .errors import DataError

logger = logging.getLogger("gedkit")


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1 (argparse default is 2, which we reserve for data errors)
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_manifest(out_path: str, command: str, args: argparse.Namespace) -> None:
    config = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k != "func" and not k.startswith("_")
    }
    manifest = {
        "tool": "gedkit",
        "version": __version__,
        "command": command,
        "config": config,
        "timestamp_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def _write_json(obj: object, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


# ------------------------------------------------------------ workers

_WORKER_MODEL: ngram.NGramModel | None = None


def _init_model_worker(model: ngram.NGramModel) -> None:
    global _WORKER_MODEL
    _WORKER_MODEL = model


def _parallel_map(
    fn: Callable, items: Sequence, jobs: int, model: ngram.NGramModel | None = None
) -> list:
    if jobs <= 1 or len(items) <= 1:
        if model is not None:
            _init_model_worker(model)
        return [fn(item) for item in items]
    initializer = _init_model_worker if model is not None else None
    initargs = (model,) if model is not None else ()
    with multiprocessing.Pool(jobs, initializer=initializer, initargs=initargs) as pool:
        return pool.map(fn, items, chunksize=max(1, len(items) // (jobs * 4)))


def _corrupt_one(payload: tuple[str, corruptor.CorruptionConfig, str, str]) -> corruptor.CorruptionRecord:
    text, config, record_id, domain = payload
    return corruptor.corrupt(text, config, record_id, domain)


def _score_one(payload: tuple[LabeledInstance, int]) -> formats.TokenScores:
    inst, topk = payload
    assert _WORKER_MODEL is not None
    scored = ngram.score_text(_WORKER_MODEL, inst.text)
    tokens, logprobs, ranks, entropies, topks, tails = [], [], [], [], [], []
    for s in scored:
        view = s.distribution
        p_t = float(view.probabilities[s.observed_index])
        k = min(topk, view.size)
        top = [float(view.probabilities[j]) for j in view.sorted_desc[:k]]
        tokens.append(s.surface)
        logprobs.append(math.log(p_t))
        ranks.append(metrics.token_rank(view, s.observed_index))
        entropies.append(metrics.entropy(view))
        topks.append(top)
        tails.append(max(0.0, 1.0 - math.fsum(top)))
    return formats.TokenScores(inst.id, tokens, logprobs, ranks, entropies, topks, tails)


def _features_one_model(inst: LabeledInstance) -> tuple[str, str, int, metrics.TextFeatureVector]:
    assert _WORKER_MODEL is not None
    records = metrics.records_from_scored(ngram.score_text(_WORKER_MODEL, inst.text))
    return inst.id, inst.domain, inst.label, metrics.aggregate_features(records)


# ----------------------------------------------------------- commands

def _correct_texts(path: str) -> list[tuple[str, str]]:
    """(text, domain) of the correct side of each sample."""
    out = []
    skipped = 0
    for s in read_samples(path):
        if s.text_fixed is not None:
            out.append((s.text_fixed, s.domain))
        else:
            skipped += 1
    if skipped:
        logger.warning("%d samples have no correct text and were skipped", skipped)
    if not out:
        raise DataError(f"{path}: no samples with a correct text")
    return out


def _parse_weights(spec: str | None) -> dict[str, float] | None:
    if not spec:
        return None
    weights: dict[str, float] = {}
    for part in spec.split(","):
        if "=" not in part:
            raise DataError(f"bad --weights entry {part!r}, expected rule=value")
        name, value = part.split("=", 1)
        try:
            weights[name.strip()] = float(value)
        except ValueError as exc:
            raise DataError(f"bad weight for rule {name!r}: {value!r}") from exc
    return weights


def _cmd_corrupt(args: argparse.Namespace) -> int:
    resources = corruptor.load_resources(args.morphology, args.confusions, args.prepositions)
    weights = _parse_weights(args.weights)
    config = corruptor.CorruptionConfig(
        seed=args.seed,
        resources=resources,
        rule_weights=weights or {name: 1.0 for name in corruptor.RULE_NAMES},
        max_edits_per_text=args.max_edits,
    )
    texts = _correct_texts(args.infile)
    payloads = []
    for i in range(args.n):
        text, domain = texts[i % len(texts)]
        payloads.append((text, config, f"syn-{i:06d}", args.domain or domain))
    records = _parallel_map(_corrupt_one, payloads, args.jobs)
    formats.write_pairs(records, args.out)
    _write_manifest(args.out, "corrupt", args)
    logger.info("wrote %d pairs to %s", len(records), args.out)
    return 0


def _cmd_fit_lm(args: argparse.Namespace) -> int:
    texts = [t for t, _ in _correct_texts(args.infile)]
    model = ngram.fit(texts, order=args.order, smoothing_k=args.smoothing_k, vocab_cap=args.vocab_cap)
    ngram.save(model, args.out)
    _write_manifest(args.out, "fit-lm", args)
    logger.info("fitted order-%d model, vocabulary %d", model.order, model.vocab_size)
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    model = ngram.load(args.model)
    instances = expand_pairs(read_samples(args.infile))
    rows = _parallel_map(
        _score_one, [(inst, args.topk) for inst in instances], args.jobs, model=model
    )
    formats.write_token_scores(rows, args.out)
    _write_manifest(args.out, "score", args)
    logger.info("scored %d instances to %s", len(rows), args.out)
    return 0


def _cmd_features(args: argparse.Namespace) -> int:
    instances = expand_pairs(read_samples(args.infile))
    if (args.model is None) == (args.scores is None):
        raise DataError("features needs exactly one of --model or --scores")
    rows: list[tuple[str, str, int, metrics.TextFeatureVector]]
    if args.model is not None:
        model = ngram.load(args.model)
        rows = _parallel_map(_features_one_model, instances, args.jobs, model=model)
    else:
        scores = formats.read_token_scores(args.scores)
        rows = []
        for inst in instances:
            ts = scores.get(inst.id)
            if ts is None:
                raise DataError(f"{args.scores}: no token scores for instance {inst.id!r}")
            records = [
                metrics.record_from_topk(tok, lp, rk, ent, top, tail)
                for tok, lp, rk, ent, top, tail in zip(
                    ts.tokens, ts.logprob, ts.rank, ts.entropy, ts.topk, ts.tail_mass
                )
            ]
            rows.append((inst.id, inst.domain, inst.label, metrics.aggregate_features(records)))
    formats.write_features(rows, args.out)
    _write_manifest(args.out, "features", args)
    logger.info("wrote %d feature rows to %s", len(rows), args.out)
    return 0


def _stratified_split(
    rows: list[dict], holdout: float, seed: int
) -> tuple[list[dict], list[dict]]:
    if not 0.0 <= holdout < 1.0:
        raise DataError("--holdout must be in [0, 1)")
    if holdout == 0.0:
        return rows, []
    rng = np.random.default_rng(evaluate._derived_seed(seed, "split"))
    train: list[dict] = []
    held: list[dict] = []
    for label in (0, 1):
        group = [r for r in rows if r["label"] == label]
        order = rng.permutation(len(group))
        n_hold = int(round(len(group) * holdout))
        held.extend(group[int(i)] for i in order[:n_hold])
        train.extend(group[int(i)] for i in order[n_hold:])
    return train, held


def _cmd_grid_search(args: argparse.Namespace) -> int:
    rows = formats.read_features(args.features)
    train, held = _stratified_split(rows, args.holdout, args.seed)
    detector, curve = grid_search_threshold(
        train, [r["label"] for r in train], args.feature, args.direction, args.grid
    )
    train_preds = detector.predict(train)
    c = evaluate.confusion(train_preds, [r["label"] for r in train])
    report = {
        "feature": detector.feature_name,
        "direction": detector.direction,
        "threshold": detector.threshold,
        "grid": args.grid,
        "n_train": len(train),
        "n_holdout": len(held),
        "train_f05": evaluate.f_beta(c.precision, c.recall),
        "baseline_f05": evaluate.f_beta(0.5, 1.0),
        "curve": [[t, f] for t, f in curve],
    }
    if held:
        held_preds = detector.predict(held)
        ch = evaluate.confusion(held_preds, [r["label"] for r in held])
        report["holdout_f05"] = evaluate.f_beta(ch.precision, ch.recall)
    _write_json(report, args.out)
    _write_manifest(args.out, "grid-search", args)
    return 0


def _cmd_fit_outlier(args: argparse.Namespace) -> int:
    emb = formats.read_embeddings(args.embeddings)
    detector = fit_outlier_detector(
        list(emb.values()),
        algorithm=args.algorithm,
        contamination=args.contamination,
        seed=args.seed,
        n_trees=args.trees,
        subsample=args.subsample,
    )
    save_outlier_detector(detector, args.out)
    _write_manifest(args.out, "fit-outlier", args)
    logger.info("fitted %s on %d vectors", args.algorithm, len(emb))
    return 0


def _cmd_score_outlier(args: argparse.Namespace) -> int:
    detector = load_outlier_detector(args.model)
    emb = formats.read_embeddings(args.embeddings)
    rows = []
    for rid, vec in emb.items():
        score = detector.score(vec)
        rows.append((rid, 1 if score > detector.score_threshold else 0, score))
    formats.write_predictions(rows, args.out)
    _write_manifest(args.out, "score-outlier", args)
    return 0


def _cmd_gmm_gap(args: argparse.Namespace) -> int:
    train = formats.read_embeddings(args.train)
    corrupted = formats.read_embeddings(args.corrupted)
    fixed = formats.read_embeddings(args.fixed)
    model = gmm_fit(
        list(train.values()), k=args.k, seed=args.seed,
        max_iter=args.max_iter, tol=args.tol,
    )
    gap = surprisal_gap(model, list(corrupted.values()), list(fixed.values()))
    _write_json(
        {
            "k": args.k,
            "seed": args.seed,
            "gap": gap,
            "n_train": len(train),
            "n_corrupted": len(corrupted),
            "n_fixed": len(fixed),
            "em_iterations": len(model.log_likelihoods),
        },
        args.out,
    )
    _write_manifest(args.out, "gmm-gap", args)
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    rows = formats.read_features(args.features)
    train, held = _stratified_split(rows, args.holdout, args.seed)
    model = classifier_fit(
        train,
        [r["label"] for r in train],
        l2=args.l2,
        epochs=args.epochs,
        lr=args.lr,
        seed=args.seed,
        feature_names=metrics.FEATURE_KEYS,
    )
    target = held if held else rows
    probs = model.predict_proba(target)
    formats.write_predictions(
        [(r["id"], 1 if p > 0.5 else 0, float(p)) for r, p in zip(target, probs)],
        args.out,
    )
    _write_manifest(args.out, "classify", args)
    if args.importance_out:
        importance = permutation_importance(
            model, target, [r["label"] for r in target],
            repeats=args.repeats, seed=args.seed,
        )
        _write_json({"importance": importance}, args.importance_out)
    return 0


def _cmd_diff(args: argparse.Namespace) -> int:
    samples = read_samples(args.pairs)
    rows = []
    skipped = 0
    for s in samples:
        if s.text_corrupted is None or s.text_fixed is None:
            skipped += 1
            continue
        rows.append((s.id, edits.word_level_diff(s.text_corrupted, s.text_fixed)))
    if skipped:
        logger.warning("%d samples lack one side and were skipped", skipped)
    formats.write_edits(rows, args.out)
    _write_manifest(args.out, "diff", args)
    return 0


def _sample_texts(samples: Iterable) -> list[str]:
    return [s.text_fixed if s.text_fixed is not None else s.text_corrupted for s in samples]


def _cmd_stats(args: argparse.Namespace) -> int:
    samples = read_samples(args.infile)
    texts = _sample_texts(samples)
    vs = edits.vocab_stats(texts, max_n=args.max_n)
    report: dict = {
        "n_samples": len(samples),
        "vocab": {
            "total_words": vs.total_words,
            "unique_words": vs.unique_words,
            **{f"unique_{n}grams": c for n, c in sorted(vs.unique_ngrams.items())},
        },
        "lines_per_text": edits.poem_line_stats(texts),
    }
    pairs = [s for s in samples if s.text_corrupted is not None and s.text_fixed is not None]
    if pairs:
        report["edit_histogram"] = edits.edit_count_histogram(pairs)
    if args.compare:
        other = _sample_texts(read_samples(args.compare))
        new_words, jaccard, containment = edits.vocab_overlap_and_novelty(texts, other)
        report["compare"] = {
            "path": str(args.compare),
            "new_words": new_words,
            "jaccard": jaccard,
            "containment": containment,
        }
    _write_json(report, args.out)
    _write_manifest(args.out, "stats", args)
    return 0


def _pairs_profile(path: str) -> edits.EditProfile:
    samples = [
        s for s in read_samples(path)
        if s.text_corrupted is not None and s.text_fixed is not None
    ]
    if not samples:
        raise DataError(f"{path}: no paired samples")
    return edits.edit_frequency_profile(samples)


def _cmd_kl(args: argparse.Namespace) -> int:
    profile_p = _pairs_profile(args.pairs_p)
    profile_q = _pairs_profile(args.pairs_q)
    d = edits.kl_divergence(profile_p, profile_q, epsilon=args.epsilon)
    _write_json(
        {
            "kl_divergence": d,
            "epsilon": args.epsilon,
            "n_signatures_p": len(profile_p.signature_frequencies),
            "n_signatures_q": len(profile_q.signature_frequencies),
        },
        args.out,
    )
    _write_manifest(args.out, "kl", args)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    instances = expand_pairs(read_samples(args.samples))
    runs = []
    for pred_path in args.pred:
        preds = formats.read_predictions(pred_path)
        ci = args.ci if len(args.pred) == 1 else "none"
        if ci == "t_interval":
            ci = "none"  # t interval applies across runs, not within one
        runs.append(
            evaluate.evaluate_predictions(
                preds, instances, ci_method=ci,
                B=args.bootstrap, level=args.level, seed=args.seed,
            )
        )
    if len(runs) == 1:
        reports = runs[0]
    else:
        reports = evaluate.aggregate_runs(runs, t_value=args.t_value)
    _write_json([r.as_dict() for r in reports], args.out)
    _write_manifest(args.out, "eval", args)
    if not args.no_table:
        print(evaluate.render_report_table(reports))
    return 0


# ------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gedkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"gedkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    res_dir = Path(__file__).parent / "resources"

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        return p

    p = add("corrupt", _cmd_corrupt, "generate corrupted/correct pairs")
    p.add_argument("--in", dest="infile", required=True, help="samples.jsonl with correct texts")
    p.add_argument("--out", required=True, help="pairs.jsonl")
    p.add_argument("--n", type=int, required=True, help="number of records")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-edits", type=int, default=2)
    p.add_argument("--weights", help="rule weights, e.g. punctuation=2,misspelling=1")
    p.add_argument("--domain", help="override output domain tag")
    p.add_argument("--morphology", default=str(res_dir / "morphology.tsv"))
    p.add_argument("--confusions", default=str(res_dir / "confusions.tsv"))
    p.add_argument("--prepositions", default=str(res_dir / "prepositions.txt"))
    p.add_argument("--jobs", type=int, default=1)

    p = add("fit-lm", _cmd_fit_lm, "fit the n-gram language model")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="model file (JSON)")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--smoothing-k", type=float, default=0.1)
    p.add_argument("--vocab-cap", type=int, default=50000)
    p.add_argument("--seed", type=int, default=0)

    p = add("score", _cmd_score, "export per-token LM statistics")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="token_scores.jsonl")
    p.add_argument("--topk", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)

    p = add("features", _cmd_features, "aggregate token metrics into text features")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="features.jsonl")
    p.add_argument("--model", help="score with the n-gram model")
    p.add_argument("--scores", help="or consume token_scores.jsonl")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)

    p = add("grid-search", _cmd_grid_search, "tune a single-feature threshold detector")
    p.add_argument("--features", required=True)
    p.add_argument("--feature", required=True, help=f"one of {', '.join(metrics.FEATURE_KEYS)}")
    p.add_argument("--direction", choices=["flag_below", "flag_above"], required=True)
    p.add_argument("--grid", type=int, default=100)
    p.add_argument("--holdout", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("fit-outlier", _cmd_fit_outlier, "fit an outlier detector on embeddings")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--algorithm", choices=["kde", "iforest", "abod"], required=True)
    p.add_argument("--contamination", type=float, default=0.1)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--subsample", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("score-outlier", _cmd_score_outlier, "score embeddings with a fitted detector")
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True, help="predictions.jsonl")
    p.add_argument("--seed", type=int, default=0)

    p = add("gmm-gap", _cmd_gmm_gap, "surprisal gap of a GMM density model")
    p.add_argument("--train", required=True, help="embeddings.jsonl of correct texts")
    p.add_argument("--corrupted", required=True)
    p.add_argument("--fixed", required=True)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("classify", _cmd_classify, "logistic classifier over feature rows")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="predictions.jsonl")
    p.add_argument("--importance-out", help="permutation importance JSON")
    p.add_argument("--holdout", type=float, default=0.3)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)

    p = add("diff", _cmd_diff, "extract word-level edits from pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True, help="edits.jsonl")
    p.add_argument("--seed", type=int, default=0)

    p = add("stats", _cmd_stats, "vocabulary, line, and edit statistics")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--compare", help="second samples.jsonl for overlap/novelty")
    p.add_argument("--max-n", type=int, default=3)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = add("kl", _cmd_kl, "KL divergence of edit-signature frequencies")
    p.add_argument("--pairs-p", required=True)
    p.add_argument("--pairs-q", required=True)
    p.add_argument("--epsilon", type=float, default=1e-9)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = add("eval", _cmd_eval, "evaluate prediction files against labeled samples")
    p.add_argument("--pred", action="append", required=True, help="predictions.jsonl (repeatable)")
    p.add_argument("--samples", required=True)
    p.add_argument("--ci", choices=["bootstrap", "t_interval", "none"], default="bootstrap")
    p.add_argument("--bootstrap", type=int, default=1000, help="bootstrap iterations")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--t-value", type=float, default=4.3)
    p.add_argument("--no-table", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"gedkit {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"gedkit {args.command}: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
