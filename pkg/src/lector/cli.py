"""Command-line pipeline: synth, score, eval, logs, fdr, predict.

Every command writes a ``.manifest.json`` next to its output carrying the
configuration, SHA-256 hashes of the inputs, and the package version, so a
run can be reproduced bit for bit. Verbosity comes from the ``LECTOR_LOG``
environment variable (debug/info/warning/error).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, analytics, baselines, keyeval, logs, scoring, synth, tensors
from .corpus import extract_topic_candidates, load_corpus, save_deck
from .scoring import (
    DEFAULT_ALPHA,
    DEFAULT_D,
    DEFAULT_K,
    MODEL_ATTENTION_LITE,
    MODEL_BINARY,
    MODEL_LECTOR,
    MODEL_TEXTRANK,
    MODEL_TFIDF,
)

logger = logging.getLogger(__name__)

MODEL_FLAGS = {
    "lector": MODEL_LECTOR,
    "tfidf": MODEL_TFIDF,
    "binary": MODEL_BINARY,
    "textrank": MODEL_TEXTRANK,
    "attnlite": MODEL_ATTENTION_LITE,
}
ATTENTION_MODELS = {MODEL_LECTOR, MODEL_ATTENTION_LITE}

TOP_TOPIC_FEATURES = 50  # topic-preference features kept for prediction


def _configure_logging() -> None:
    level = os.environ.get("LECTOR_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _hash_inputs(paths: dict[str, str | None]) -> dict[str, dict[str, str]]:
    out: dict[str, dict[str, str]] = {}
    for name, p in paths.items():
        if p is None:
            continue
        path = Path(p)
        if path.is_dir():
            out[name] = {f.name: _sha256(f) for f in sorted(path.iterdir()) if f.is_file()}
        elif path.is_file():
            out[name] = {path.name: _sha256(path)}
    return out


def _config_from_args(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "command")}


def _write_manifest(out_base: Path, command: str, config: dict,
                    inputs: dict[str, str | None]) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "inputs": _hash_inputs(inputs),
    }
    path = out_base.with_suffix(out_base.suffix + ".manifest.json") \
        if out_base.suffix else out_base / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True)
        fh.write("\n")


def _load_bundles(bundle_dir: str, corpus, model: str) -> dict[str, tensors.TensorBundle]:
    bundles = {}
    for deck in corpus:
        path = tensors.bundle_path(bundle_dir, deck.deck_id)
        if not path.exists():
            raise FileNotFoundError(
                f"missing tensor bundle for deck {deck.deck_id!r} "
                f"(required by model {model}): {path}"
            )
        bundle = tensors.read_tensor_bundle(path)
        report = tensors.validate_bundle(bundle, deck)
        if report:
            details = "; ".join(str(v) for v in report[:5])
            raise ValueError(
                f"bundle for deck {deck.deck_id!r} failed validation "
                f"({len(report)} violation(s)): {details}"
            )
        bundles[deck.deck_id] = bundle
    return bundles


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = synth.SynthSpec(
        seed=args.seed,
        slide_count=args.slides,
        vocab_size=args.vocab,
        planted_topics=synth.default_planted(args.planted),
        dim=args.dim,
        student_count=args.students,
        at_risk_fraction=args.at_risk_fraction,
        signal_strength=args.signal,
    )
    corpus, bundles, gold = synth.generate_corpus(spec)
    corpus_dir = out / "corpus"
    bundle_dir = out / "bundles"
    bundle_dir.mkdir(exist_ok=True)
    for deck in corpus:
        save_deck(deck, corpus_dir)
        tensors.write_tensor_bundle(
            bundles[deck.deck_id], tensors.bundle_path(bundle_dir, deck.deck_id)
        )
    keyeval.save_gold(gold, out / "gold.txt")

    matrix = scoring.build_matrix(corpus, bundles)
    events, grades = synth.generate_logs(spec, matrix)
    logs.save_events(events, out / "events.csv")
    save_grades(grades, out / "grades.csv")

    _write_manifest(out, "synth", _config_from_args(args), {})
    print(f"synth fixture written to {out}")
    return 0


def save_grades(grades: dict[str, str], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "grade"])
        for user in sorted(grades):
            writer.writerow([user, grades[user]])


def load_grades(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "user_id" not in reader.fieldnames \
                or "grade" not in reader.fieldnames:
            raise ValueError(f"{path}: grades CSV needs user_id,grade columns")
        for rownum, row in enumerate(reader, start=2):
            grade = row["grade"].strip().upper()
            if grade not in analytics.GRADES:
                raise ValueError(f"{path} row {rownum}: unknown grade {row['grade']!r}")
            out[row["user_id"].strip()] = grade
    return out


def cmd_score(args) -> int:
    model = MODEL_FLAGS[args.model]
    corpus = load_corpus(args.corpus)
    bundles = None
    if model in ATTENTION_MODELS:
        if not args.bundles:
            raise ValueError(f"model {args.model} requires --bundles")
        bundles = _load_bundles(args.bundles, corpus, model)
    topics = extract_topic_candidates(corpus)
    if model == MODEL_LECTOR:
        matrix = scoring.build_matrix(
            corpus, bundles, k=args.k, alpha=args.alpha, d=args.d, phi=args.phi,
            topics=topics,
        )
    elif model == MODEL_TFIDF:
        matrix = baselines.tfidf_matrix(corpus, topics)
    elif model == MODEL_BINARY:
        matrix = baselines.binary_matrix(corpus, topics)
    elif model == MODEL_TEXTRANK:
        matrix = baselines.textrank_matrix(corpus, topics)
    else:
        matrix = baselines.attention_lite_matrix(corpus, bundles, topics, k=args.k)

    out = Path(args.out)
    scoring.save_matrix(matrix, out)
    _write_manifest(out, "score", {
        "model": args.model, "k": args.k, "alpha": args.alpha, "d": args.d,
        "phi": args.phi, "corpus": args.corpus, "bundles": args.bundles,
        "out": str(out),
    }, {"corpus": args.corpus, "bundles": args.bundles})
    print(f"{model} matrix written to {out}")
    return 0


def cmd_eval(args) -> int:
    matrix = scoring.load_matrix(args.matrix)
    gold = keyeval.load_gold(args.gold)
    report = keyeval.evaluate_at_n(matrix, gold)
    out = Path(args.out)
    keyeval.save_report(report, out)
    _write_manifest(out, "eval", {
        "matrix": args.matrix, "gold": args.gold, "out": str(out),
    }, {"matrix": args.matrix, "gold": args.gold})
    _model_caveat(matrix)
    print(keyeval.format_report(report))
    return 0


def _filtered_events(args):
    events = logs.load_events(args.logs)
    if getattr(args, "schedule", None):
        windows = logs.load_schedule(args.schedule)
        in_events, out_events = logs.split_in_out_class(events, windows)
        period = getattr(args, "period", "all")
        if period == "in":
            return in_events
        if period == "out":
            return out_events
    return events


def _user_preferences(events, matrix, cap_seconds):
    """Per-user slide and topic preference vectors; zero-time users excluded."""
    page_times = logs.global_page_times(events, matrix, cap_seconds)
    slide_prefs = {}
    topic_prefs = {}
    for user in sorted(page_times):
        try:
            sp = logs.slide_preferences(page_times[user], matrix.slide_count, user)
        except ValueError:
            logger.warning("user %s has no reading time; excluded", user)
            continue
        slide_prefs[user] = sp
        topic_prefs[user] = logs.topic_preferences(sp, matrix)
    return slide_prefs, topic_prefs


def cmd_logs(args) -> int:
    events = _filtered_events(args)
    features = logs.activity_features(events, args.cap_seconds)
    payload: dict = {"users": {}}
    matrix = None
    if args.matrix:
        matrix = scoring.load_matrix(args.matrix)
        slide_prefs, topic_prefs = _user_preferences(events, matrix, args.cap_seconds)
        payload["topics"] = [" ".join(w) for w in matrix.topic_words]
    for user in sorted(features):
        entry = {
            "features": {name: val for name, val in
                         zip(logs.FEATURE_NAMES, features[user].vector().tolist())},
        }
        if matrix is not None:
            if user in slide_prefs:
                entry["slide_preferences"] = slide_prefs[user].values.tolist()
                entry["topic_preferences"] = topic_prefs[user].values.tolist()
            else:
                entry["slide_preferences"] = None
                entry["topic_preferences"] = None
        payload["users"][user] = entry
    out = Path(args.out)
    _write_json(out, payload)
    _write_manifest(out, "logs", {
        "logs": args.logs, "matrix": args.matrix, "schedule": args.schedule,
        "period": args.period, "cap_seconds": args.cap_seconds, "out": str(out),
    }, {"logs": args.logs, "matrix": args.matrix, "schedule": args.schedule})
    print(f"features for {len(payload['users'])} user(s) written to {out}")
    return 0


def _group_users(grades: dict[str, str], selector: str) -> set[str]:
    selector = selector.strip().upper()
    if selector == "RISK":
        wanted = analytics.AT_RISK_GRADES
    elif selector == "SAFE":
        wanted = set(analytics.GRADES) - analytics.AT_RISK_GRADES
    elif selector in analytics.GRADES:
        wanted = {selector}
    else:
        raise ValueError(f"unknown group selector {selector!r} "
                         f"(use a grade letter, RISK, or SAFE)")
    return {u for u, g in grades.items() if g in wanted}


def _model_caveat(matrix) -> None:
    if matrix.model == MODEL_ATTENTION_LITE:
        print(f"note: {baselines.ATTENTION_LITE_CAVEAT}")


def cmd_fdr(args) -> int:
    matrix = scoring.load_matrix(args.matrix)
    _model_caveat(matrix)
    events = _filtered_events(args)
    grades = load_grades(args.grades)
    _, topic_prefs = _user_preferences(events, matrix, args.cap_seconds)
    features = logs.activity_features(events, args.cap_seconds)

    users_a = sorted(_group_users(grades, args.group_a) & set(topic_prefs))
    users_b = sorted(_group_users(grades, args.group_b) & set(topic_prefs))
    if len(users_a) < 2 or len(users_b) < 2:
        raise ValueError(
            f"need at least 2 students with reading time per group, "
            f"got {len(users_a)} and {len(users_b)}"
        )
    prefs_a = [topic_prefs[u] for u in users_a]
    prefs_b = [topic_prefs[u] for u in users_b]
    topic_idx, topic_fdr = analytics.best_topic(prefs_a, prefs_b, matrix.topic_words)

    rt_a = [features[u].read_time for u in users_a]
    rt_b = [features[u].read_time for u in users_b]
    read_time_fdr = analytics.fdr(rt_a, rt_b)

    payload = {
        "group_a": {"selector": args.group_a, "users": len(users_a)},
        "group_b": {"selector": args.group_b, "users": len(users_b)},
        "best_topic": {
            "words": " ".join(matrix.topic_words[topic_idx]),
            "fdr": topic_fdr,
        },
        "read_time_fdr": read_time_fdr,
    }
    out = Path(args.out)
    _write_json(out, payload)
    _write_manifest(out, "fdr", {
        "matrix": args.matrix, "logs": args.logs, "grades": args.grades,
        "schedule": args.schedule, "period": args.period,
        "group_a": args.group_a, "group_b": args.group_b,
        "cap_seconds": args.cap_seconds, "out": str(out),
    }, {"matrix": args.matrix, "logs": args.logs, "grades": args.grades,
        "schedule": args.schedule})
    print(f"best topic {payload['best_topic']['words']!r} "
          f"fdr={topic_fdr:.4g} vs reading-time fdr={read_time_fdr:.4g}")
    return 0


def build_representations(events, matrix, grades, cap_seconds):
    """Paired design matrices: topic preferences T and traditional features F.

    Users must appear in both the logs and the grades file and have nonzero
    reading time; others are excluded with a warning. T keeps the
    highest-ranked topics (at most TOP_TOPIC_FEATURES columns).
    """
    _, topic_prefs = _user_preferences(events, matrix, cap_seconds)
    features = logs.activity_features(events, cap_seconds)
    users = sorted(set(topic_prefs) & set(features) & set(grades))
    for u in sorted(set(topic_prefs) - set(grades)):
        logger.warning("user %s has logs but no grade; excluded", u)
    if not users:
        raise ValueError("no users with both reading time and a grade")

    mt = keyeval.keyphrase_scores(matrix)
    top = keyeval.topn(mt, matrix.topic_words,
                       min(TOP_TOPIC_FEATURES, matrix.topic_count))
    T = np.vstack([topic_prefs[u].values[top] for u in users])
    t_names = [" ".join(matrix.topic_words[j]) for j in top]
    F = np.vstack([features[u].vector() for u in users])
    y = np.array([1.0 if grades[u] in analytics.AT_RISK_GRADES else 0.0 for u in users])
    return users, T, t_names, F, list(logs.FEATURE_NAMES), y


def cmd_predict(args) -> int:
    matrix = scoring.load_matrix(args.matrix)
    _model_caveat(matrix)
    events = _filtered_events(args)
    grades = load_grades(args.grades)
    users, T, t_names, F, f_names, y = build_representations(
        events, matrix, grades, args.cap_seconds
    )
    if len(np.unique(y)) < 2:
        raise ValueError("need both at-risk and safe students")

    cv_topic = analytics.cross_validate(T, y, folds=args.folds,
                                        fold_size=args.fold_size, seed=args.seed)
    cv_trad = analytics.cross_validate(F, y, folds=args.folds,
                                       fold_size=args.fold_size, seed=args.seed)
    comparison = analytics.compare_representations([cv_topic], [cv_trad])

    model = analytics.train_logreg(T, y, feature_names=t_names, seed=args.seed)
    proba = analytics.predict_proba(model, T)
    pop_mean = T.mean(axis=0)
    explanations = {}
    for i, user in enumerate(users):
        if proba[i] < 0.5:
            continue
        contribs = analytics.explain_prediction(model, T[i], pop_mean)
        contribs.sort(key=lambda c: -abs(c["contribution"]))
        explanations[user] = {
            "probability": float(proba[i]),
            "grade": grades[user],
            "top_contributions": contribs[:5],
        }

    def cv_dict(cv: analytics.CVResult) -> dict:
        return {
            "per_fold": [{"f1": float(f), "auc": float(a)}
                         for f, a in zip(cv.f1, cv.auc)],
            "f1_mean": cv.f1_mean, "f1_std": cv.f1_std,
            "auc_mean": cv.auc_mean, "auc_std": cv.auc_std,
            "shrunk": cv.shrunk,
        }

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "cv_results.json", {
        "topic_preferences": cv_dict(cv_topic),
        "traditional_features": cv_dict(cv_trad),
        "users": users,
    })
    _write_json(out / "comparison.json", comparison)
    _write_json(out / "explanations.json", explanations)
    _write_manifest(out, "predict", {
        "matrix": args.matrix, "logs": args.logs, "grades": args.grades,
        "schedule": args.schedule, "period": args.period,
        "folds": args.folds, "fold_size": args.fold_size, "seed": args.seed,
        "cap_seconds": args.cap_seconds, "out": str(out),
    }, {"matrix": args.matrix, "logs": args.logs, "grades": args.grades,
        "schedule": args.schedule})
    print(
        f"topic AUC {cv_topic.auc_mean:.3f}+/-{cv_topic.auc_std:.3f} vs "
        f"traditional AUC {cv_trad.auc_mean:.3f}+/-{cv_trad.auc_std:.3f} "
        f"({len(users)} students)"
    )
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_schedule_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--schedule", help="JSON list of class windows")
    p.add_argument("--period", choices=["in", "out", "all"], default="all",
                   help="keep only in-class or out-class events")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lector",
        description="slide-topic scoring and reading-log analytics",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic fixture")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--slides", type=int, default=20)
    p.add_argument("--vocab", type=int, default=50)
    p.add_argument("--planted", type=int, default=5)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--students", type=int, default=60)
    p.add_argument("--at-risk-fraction", type=float, default=0.5)
    p.add_argument("--signal", type=float, default=1.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("score", help="build a slide-topic matrix")
    p.add_argument("--corpus", required=True)
    p.add_argument("--bundles")
    p.add_argument("--model", choices=sorted(MODEL_FLAGS), default="lector")
    p.add_argument("--k", type=float, default=DEFAULT_K)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--d", type=float, default=DEFAULT_D)
    p.add_argument("--phi", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="evaluate a matrix against gold keyphrases")
    p.add_argument("--matrix", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("logs", help="reading-log features and preferences")
    p.add_argument("--logs", required=True)
    p.add_argument("--matrix")
    _add_schedule_flags(p)
    p.add_argument("--cap-seconds", type=float, default=logs.DEFAULT_CAP_SECONDS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_logs)

    p = sub.add_parser("fdr", help="separability of two grade groups")
    p.add_argument("--matrix", required=True)
    p.add_argument("--logs", required=True)
    p.add_argument("--grades", required=True)
    p.add_argument("--group-a", required=True, help="grade letter, RISK, or SAFE")
    p.add_argument("--group-b", required=True)
    _add_schedule_flags(p)
    p.add_argument("--cap-seconds", type=float, default=logs.DEFAULT_CAP_SECONDS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fdr)

    p = sub.add_parser("predict", help="at-risk prediction from two representations")
    p.add_argument("--matrix", required=True)
    p.add_argument("--logs", required=True)
    p.add_argument("--grades", required=True)
    _add_schedule_flags(p)
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--fold-size", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap-seconds", type=float, default=logs.DEFAULT_CAP_SECONDS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
