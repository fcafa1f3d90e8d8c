"""Command-line surface: tag, build-repo, query, predict, train,
gradcheck, synth, eval.

Every command is a pure function of (inputs, config, seed): identical
invocations produce byte-identical outputs. Config precedence is
defaults < --config file < flags. Exit codes: 0 ok, 1 prediction had no
match, 2 input error, 3 model/schema mismatch.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import evaluation, predictor, repository, retrieval, synth, tagger
from .config import CliConfig, apply_overrides, load_config
from .errors import (
    ConfigError,
    DegenerateDatasetError,
    DuplicateIdError,
    EmptyQueryError,
    EmptyQuestionError,
    EmptyRepositoryError,
    LabelOutOfRangeError,
    MalformedRecordError,
    ModelMismatchError,
    NoAgentSentenceError,
    NoCustomerSentenceError,
    NoMatchError,
    SchemaMismatchError,
    SchemaViolationError,
    UnknownLabelError,
)
from .text import tokenize

EXIT_OK = 0
EXIT_NO_MATCH = 1
EXIT_INPUT = 2
EXIT_MODEL = 3

_INPUT_ERRORS = (
    OSError,
    MalformedRecordError,
    EmptyQueryError,
    ConfigError,
    DuplicateIdError,
    EmptyQuestionError,
    EmptyRepositoryError,
    DegenerateDatasetError,
    ValueError,
)
_MODEL_ERRORS = (
    ModelMismatchError,
    SchemaMismatchError,
    SchemaViolationError,
    UnknownLabelError,
    LabelOutOfRangeError,
)

# sentinel: --report given without a directory, use paths.reports
_REPORT_FROM_CONFIG = "@config"

_PRESETS = {
    "default": synth.SynthConfig(),
    "disjoint": synth.DISJOINT_TASK,
    "scaling": synth.SCALING_TASK,
    "tagging": synth.TAGGING_TASK,
}


def _emit(obj, pretty: bool) -> None:
    if pretty:
        print(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False))
    else:
        print(json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False))


def _report_dir(args, cfg: CliConfig) -> str | None:
    target = getattr(args, "report", None)
    if target is None:
        return None
    if target == _REPORT_FROM_CONFIG:
        target = cfg.paths.reports
    os.makedirs(target, exist_ok=True)
    return target


def _merged_config(args) -> CliConfig:
    cfg = load_config(args.config) if args.config else CliConfig()
    return apply_overrides(
        cfg,
        **{
            "bm25.alpha": getattr(args, "alpha", None),
            "bm25.beta": getattr(args, "beta", None),
            "predictor.k": getattr(args, "k", None),
            "predictor.fallback": getattr(args, "fallback", None),
            "tagger.n_as": getattr(args, "n_as", None),
            "tagger.n_st": getattr(args, "n_st", None),
            "tagger.d_model": getattr(args, "d_model", None),
            "tagger.window": getattr(args, "window", None),
            "paths.repository": getattr(args, "repo", None),
            "paths.model": getattr(args, "model", None),
            "paths.reports": None,
        },
    )


# --- commands ---------------------------------------------------------------


def cmd_tag(args, cfg: CliConfig) -> int:
    model, model_cfg = tagger.load_model(cfg.paths.model)
    transcripts = tagger.load_transcripts(args.transcripts)
    tagged = []
    failures = []
    for t in transcripts:
        try:
            tagged.append(
                tagger.tag_transcript(t, model, model_cfg, rule=args.rule, window=cfg.tagger.window)
            )
        except (NoAgentSentenceError, NoCustomerSentenceError) as exc:
            failures.append((t.id, str(exc)))
    if args.out:
        tagger.save_tag_report(tagged, args.out)
    else:
        for t in tagged:
            _emit(
                {
                    "transcript_id": t.transcript_id,
                    "selected_index": t.selected_index,
                    "rule": t.rule,
                    "sigma": t.sigma,
                },
                args.pretty,
            )
    for tid, msg in failures:
        print(f"tag: transcript {tid}: {msg}", file=sys.stderr)
    return EXIT_INPUT if failures else EXIT_OK


def cmd_build_repo(args, cfg: CliConfig) -> int:
    if (args.records is None) == (args.transcripts is None):
        raise ConfigError("exactly one of --records or --transcripts is required")
    skipped = 0
    if args.records:
        records = repository.load_records(args.records)
        schema = repository.infer_schema(records)
        repo = repository.build_repository(records, schema)
    else:
        model, model_cfg = tagger.load_model(cfg.paths.model)
        transcripts = tagger.load_transcripts(args.transcripts)
        schema = repository.LabelSchema(
            categorical=tuple(args.categorical), continuous=tuple(args.continuous)
        )

        def tag_fn(t):
            return tagger.tag_transcript(
                t, model, model_cfg, rule=args.rule, window=cfg.tagger.window
            ).selected_index

        records, skips = repository.ingest_transcripts(transcripts, tag_fn, schema)
        skipped = len(skips)
        if args.skips:
            repository.save_skip_report(skips, args.skips)
        repo = repository.build_repository(records, schema)
    repository.save(repo, args.out)
    _emit({"out": args.out, "records": len(repo), "skipped": skipped}, args.pretty)
    return EXIT_OK


def cmd_query(args, cfg: CliConfig) -> int:
    repo = repository.load(cfg.paths.repository)
    index = retrieval.build_index(repo, retrieval.Bm25Params(cfg.bm25.alpha, cfg.bm25.beta))
    results = index.top_n(tokenize(args.query), args.n)
    payload = {
        "query": args.query,
        "n": args.n,
        "matched": len(results),
        "results": [
            {
                "doc_id": r.doc_id,
                "rank": r.rank,
                "score": r.score,
                "question": repo.record(r.doc_id).question,
            }
            for r in results
        ],
    }
    _emit(payload, args.pretty)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rank", "doc_id", "score", "question"])
            for r in results:
                writer.writerow([r.rank, r.doc_id, repr(r.score), repo.record(r.doc_id).question])
    return EXIT_OK


def _histogram(samples: list[float], bins: int = 10) -> dict:
    counts, edges = np.histogram(samples, bins=bins)
    return {"counts": [int(c) for c in counts], "edges": [float(e) for e in edges]}


def cmd_predict(args, cfg: CliConfig) -> int:
    repo = repository.load(cfg.paths.repository)
    index = retrieval.build_index(repo, retrieval.Bm25Params(cfg.bm25.alpha, cfg.bm25.beta))
    label = args.label
    k = cfg.predictor.k
    if label in repo.schema.categorical:
        kind = "categorical"
    elif label in repo.schema.continuous:
        kind = "continuous"
    else:
        raise UnknownLabelError(label)

    fallback_used = False
    try:
        if kind == "categorical":
            pred = predictor.predict_categorical(index, repo, args.query, label, k)
        else:
            pred = predictor.predict_continuous(index, repo, args.query, label, k)
    except NoMatchError:
        if cfg.predictor.fallback != "majority":
            print(f"predict: no match for {args.query!r}", file=sys.stderr)
            return EXIT_NO_MATCH
        fallback_used = True
        if kind == "categorical":
            pred = predictor.corpus_categorical(repo, label)
        else:
            pred = predictor.corpus_continuous(repo, label)

    payload = {"query": args.query, "kind": kind, "k": k, "fallback_used": fallback_used}
    payload.update(pred.to_dict())
    if kind == "continuous":
        payload["histogram"] = _histogram(pred.samples)
        del payload["samples"]

    _emit(payload, args.pretty)
    report = _report_dir(args, cfg)
    if report:
        from . import plots

        with open(os.path.join(report, "prediction.json"), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2, ensure_ascii=False)
            fh.write("\n")
        with open(
            os.path.join(report, "distribution.csv"), "w", encoding="utf-8", newline=""
        ) as fh:
            writer = csv.writer(fh)
            if kind == "categorical":
                writer.writerow(["category", "count", "probability"])
                for share in pred.ranked:
                    writer.writerow([share.category, share.count, repr(share.probability)])
            else:
                writer.writerow(["rank", "value"])
                for rank, value in enumerate(pred.samples, start=1):
                    writer.writerow([rank, repr(value)])
        figure = os.path.join(report, "distribution.png")
        if kind == "categorical":
            plots.plot_categorical(pred, figure, query=args.query)
        else:
            plots.plot_continuous(pred, figure, query=args.query)
    return EXIT_OK


def cmd_train(args, cfg: CliConfig) -> int:
    transcripts = tagger.load_transcripts(args.transcripts)
    labels = []
    for t in transcripts:
        value = t.metadata.get(args.label)
        if value is None:
            raise ConfigError(f"transcript {t.id} lacks metadata label {args.label!r}")
        labels.append(str(value))
    classes = sorted(set(labels))
    class_index = {name: i for i, name in enumerate(classes)}
    dataset = [(t, class_index[lab]) for t, lab in zip(transcripts, labels)]
    tcfg = tagger.TaggerConfig(
        n_as=cfg.tagger.n_as,
        n_st=cfg.tagger.n_st,
        d_model=cfg.tagger.d_model,
        n_classes=len(classes),
    )
    initial = tagger.batch_loss(tagger.init_model(dataset, tcfg, args.seed), dataset, tcfg)
    model = tagger.train(dataset, tcfg, lr=args.lr, epochs=args.epochs, seed=args.seed)
    final = tagger.batch_loss(model, dataset, tcfg)
    tagger.save_model(model, tcfg, args.out)
    _emit(
        {
            "out": args.out,
            "classes": classes,
            "examples": len(dataset),
            "epochs": args.epochs,
            "lr": args.lr,
            "seed": args.seed,
            "initial_loss": initial,
            "final_loss": final,
        },
        args.pretty,
    )
    return EXIT_OK


def cmd_gradcheck(args, cfg: CliConfig) -> int:
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.trials):
        model, batch, tcfg = tagger.make_gradcheck_instance(rng)
        worst = max(worst, tagger.gradient_check(model, batch, tcfg, eps=args.eps))
    passed = worst <= args.tolerance
    _emit(
        {
            "trials": args.trials,
            "seed": args.seed,
            "eps": args.eps,
            "tolerance": args.tolerance,
            "max_rel_error": worst,
            "passed": passed,
        },
        args.pretty,
    )
    return EXIT_OK if passed else 1


def _synth_config(args) -> synth.SynthConfig:
    config = _PRESETS[args.preset]
    overrides = {
        "seed": args.seed,
        "n_clusters": args.clusters,
        "docs_per_cluster": args.docs_per_cluster,
        "queries_per_cluster": args.queries_per_cluster,
        "vocab_per_cluster": args.vocab_per_cluster,
        "shared_vocab": args.shared_vocab,
        "shared_token_rate": args.shared_token_rate,
    }
    values = {name: value for name, value in overrides.items() if value is not None}
    if values:
        config = replace(config, **values)
    return config


def cmd_synth(args, cfg: CliConfig) -> int:
    config = _synth_config(args)
    data = synth.generate(config)
    os.makedirs(args.out, exist_ok=True)
    repo = repository.build_repository(data.records, data.schema)
    repository.save(repo, os.path.join(args.out, "records.jsonl"))
    tagger.save_transcripts(data.transcripts, os.path.join(args.out, "transcripts.jsonl"))
    with open(os.path.join(args.out, "queries.jsonl"), "w", encoding="utf-8") as fh:
        for q in data.queries:
            fh.write(
                json.dumps(
                    {"text": q.text, "category": q.category, "handle_time": q.handle_time},
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )
    with open(os.path.join(args.out, "synth_config.json"), "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    _emit(
        {
            "out": args.out,
            "records": len(data.records),
            "transcripts": len(data.transcripts),
            "queries": len(data.queries),
        },
        args.pretty,
    )
    return EXIT_OK


def cmd_eval(args, cfg: CliConfig) -> int:
    config = _synth_config(args)
    sizes = [int(s) for s in args.sizes.split(",") if s]
    params = retrieval.Bm25Params(cfg.bm25.alpha, cfg.bm25.beta)
    reports = evaluation.scaling_experiment(config, sizes, k=cfg.predictor.k, params=params)
    payload = [r.to_dict() for r in reports]
    _emit(payload, args.pretty)
    report = _report_dir(args, cfg)
    if report:
        from . import plots

        with open(os.path.join(report, "eval.json"), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
        with open(os.path.join(report, "eval.csv"), "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["size"]
                + [f"top{n}" for n in evaluation.TOP_N_LEVELS]
                + [f"within{t}" for t in evaluation.ERROR_THRESHOLDS]
            )
            for r in reports:
                writer.writerow(
                    [r.size]
                    + [repr(r.top_n_accuracy[n]) for n in evaluation.TOP_N_LEVELS]
                    + [repr(r.within_err[t]) for t in evaluation.ERROR_THRESHOLDS]
                )
        plots.plot_scaling(reports, os.path.join(report, "scaling.png"))
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--pretty", action="store_true", help="indent JSON output")

    parser = argparse.ArgumentParser(
        prog="qtriage",
        description="Tag customer questions, search the question repository, predict labels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tag", parents=[common], help="tag transcripts with a trained model")
    p.add_argument("--transcripts", required=True)
    p.add_argument("--model", help="model file (default: paths.model)")
    p.add_argument("--rule", type=int, choices=(1, 2), default=2)
    p.add_argument("--window", type=float, help="rule-2 window (default: tagger.window)")
    p.add_argument("--out", help="tag report file (default: stdout)")
    p.set_defaults(handler=cmd_tag)

    p = sub.add_parser("build-repo", parents=[common], help="assemble a question repository")
    p.add_argument("--records", help="records JSONL to validate and store")
    p.add_argument("--transcripts", help="transcripts JSONL to tag and ingest")
    p.add_argument("--model", help="model file for tagging (default: paths.model)")
    p.add_argument("--rule", type=int, choices=(1, 2), default=2)
    p.add_argument("--window", type=float)
    p.add_argument("--categorical", nargs="*", default=["product_service"])
    p.add_argument("--continuous", nargs="*", default=["handle_time"])
    p.add_argument("--out", required=True)
    p.add_argument("--skips", help="skip report JSONL")
    p.set_defaults(handler=cmd_build_repo)

    p = sub.add_parser("query", parents=[common], help="rank repository questions for a query")
    p.add_argument("query")
    p.add_argument("--repo", help="repository file (default: paths.repository)")
    p.add_argument("-n", type=int, default=10)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--csv", help="also write results as CSV")
    p.set_defaults(handler=cmd_query)

    p = sub.add_parser("predict", parents=[common], help="predict a label for a question")
    p.add_argument("query")
    p.add_argument("--repo", help="repository file (default: paths.repository)")
    p.add_argument("--label", required=True)
    p.add_argument("-k", type=int, help="neighbor count (default: predictor.k)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--fallback", choices=("majority",))
    p.add_argument(
        "--report",
        nargs="?",
        const=_REPORT_FROM_CONFIG,
        help="write prediction.json, distribution.csv and distribution.png to this directory",
    )
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("train", parents=[common], help="train the toy attention tagger")
    p.add_argument("--transcripts", required=True)
    p.add_argument("--label", default="product_service")
    p.add_argument("--out", required=True)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-as", dest="n_as", type=int)
    p.add_argument("--n-st", dest="n_st", type=int)
    p.add_argument("--d-model", dest="d_model", type=int)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient check")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(handler=cmd_gradcheck)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--preset", choices=sorted(_PRESETS), default="default")
    p.add_argument("--seed", type=int)
    p.add_argument("--clusters", type=int)
    p.add_argument("--docs-per-cluster", dest="docs_per_cluster", type=int)
    p.add_argument("--queries-per-cluster", dest="queries_per_cluster", type=int)
    p.add_argument("--vocab-per-cluster", dest="vocab_per_cluster", type=int)
    p.add_argument("--shared-vocab", dest="shared_vocab", type=int)
    p.add_argument("--shared-token-rate", dest="shared_token_rate", type=float)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("eval", parents=[common], help="repository-size scaling experiment")
    p.add_argument("--sizes", default="3000,6000,9000,12000")
    p.add_argument("-k", type=int, help="neighbor count (default: predictor.k)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--preset", choices=sorted(_PRESETS), default="scaling")
    p.add_argument("--seed", type=int)
    p.add_argument("--clusters", type=int)
    p.add_argument("--docs-per-cluster", dest="docs_per_cluster", type=int)
    p.add_argument("--queries-per-cluster", dest="queries_per_cluster", type=int)
    p.add_argument("--vocab-per-cluster", dest="vocab_per_cluster", type=int)
    p.add_argument("--shared-vocab", dest="shared_vocab", type=int)
    p.add_argument("--shared-token-rate", dest="shared_token_rate", type=float)
    p.add_argument(
        "--report",
        nargs="?",
        const=_REPORT_FROM_CONFIG,
        help="write eval.json, eval.csv and scaling.png to this directory",
    )
    p.set_defaults(handler=cmd_eval)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _merged_config(args)
        return args.handler(args, cfg)
    except NoMatchError as exc:
        print(f"qtriage: {exc}", file=sys.stderr)
        return EXIT_NO_MATCH
    except _MODEL_ERRORS as exc:
        print(f"qtriage: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except _INPUT_ERRORS as exc:
        print(f"qtriage: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
