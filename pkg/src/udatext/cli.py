"""Command-line pipeline: preprocess -> embed -> augment -> train -> evaluate -> report.

Every subcommand writes its artifacts atomically (nothing is left behind on
failure) plus ``<artifact>.manifest.json`` recording flags, seed and the
SHA-256 of every input and output.

Exit codes: 0 ok, 1 usage error, 2 data/contract error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .augment import (AugmentConfig, HttpTranslator, MockTranslator, augment_dataset,
                      augmentation_pairs)
from .classifiers import (DEFAULT_GRIDS, TRAINERS, GridSpec, class_scores, grid_search_cv,
                          load_model, rank_classes, save_model)
from .corpus import SplitSpec, load_dataset, read_jsonl, save_dataset, stratified_split
from .errors import ContractError, NumericError, TranslatorError
from .evaluation import build_report, comparison_report, load_audit, rankings_from_scores
from .features import (SkipGramConfig, compute_tfidf, doc_matrix, load_embeddings,
                       load_layer_features, select_layers, tfidf_vectors, train_skipgram,
                       write_embeddings)
from .features.tfidf import TfIdfTable
from .pipeline import (Featurizer, embeddings_descriptor, layers_descriptor, load_feature_matrix,
                       meta_path, predict_text, read_features, sha256_file, tfidf_descriptor, write_features,
                       write_features_meta)
from .plotting import per_class_chart
from .uda import TsaSchedule, UdaConfig, train_uda

log = logging.getLogger("udatext")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class Run:
    """Collects inputs/outputs of one subcommand and commits outputs atomically."""

    def __init__(self, args):
        self.args = args
        self.inputs = []
        self.outputs = []      # (final, temp)

    def input(self, path):
        p = Path(path)
        if not p.is_file():
            raise ContractError(f"input not found: {path}")
        self.inputs.append(p)
        return p

    def output(self, path):
        final = Path(path)
        if not final.parent.exists():
            final.parent.mkdir(parents=True, exist_ok=True)
        tmp = final.with_name(f".{final.name}.tmp-{os.getpid()}")
        self.outputs.append((final, tmp))
        return tmp

    def abort(self):
        for _, tmp in self.outputs:
            tmp.unlink(missing_ok=True)

    def commit(self):
        for final, tmp in self.outputs:
            os.replace(tmp, final)
        if not self.outputs:
            return
        flags = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(self.args).items()
                 if k not in ("func", "config")}
        manifest = {
            "command": self.args.command,
            "version": __version__,
            "flags": flags,
            "seed": getattr(self.args, "seed", None),
            "inputs": {str(p): sha256_file(p) for p in self.inputs},
            "outputs": {str(f): sha256_file(f) for f, _ in self.outputs},
        }
        primary = self.outputs[0][0]
        with open(primary.with_name(primary.name + ".manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _max_depth(text):
    return None if text.lower() in ("none", "unbounded") else int(text)


def _load_corpus(run, paths, require_labels=False):
    docs = []
    for p in paths:
        docs.extend(load_dataset(run.input(p), require_labels=require_labels).docs)
    return docs


# -- subcommands ----------------------------------------------------------


def cmd_preprocess(args, run):
    ds = load_dataset(run.input(args.input), require_labels=not args.allow_unlabeled)
    save_dataset(ds, run.output(args.output))
    print(f"{len(ds)} documents, {len(ds.classes)} classes -> {args.output}")


def cmd_split(args, run):
    ds = load_dataset(run.input(args.input), require_labels=True)
    if len(args.per_class) != 3:
        raise UsageError("--per-class needs three counts: train,valid,test")
    parts = stratified_split(ds, SplitSpec(tuple(args.per_class), args.seed))
    for part, path in zip(parts, (args.train_out, args.valid_out, args.test_out)):
        save_dataset(part, run.output(path))
    print("split sizes: " + " / ".join(str(len(p)) for p in parts))


def cmd_train_embeddings(args, run):
    docs = _load_corpus(run, args.input)
    cfg = SkipGramConfig(dim=args.dim, window=args.window, min_count=args.min_count,
                         negatives=args.negatives, epochs=args.epochs, lr=args.lr, seed=args.seed)
    emb = train_skipgram(docs, cfg)
    write_embeddings(emb, run.output(args.output))
    print(f"{len(emb.vocab)} vectors of dim {emb.dim} -> {args.output}")


def cmd_tfidf(args, run):
    table = compute_tfidf(_load_corpus(run, args.input))
    table.save(run.output(args.output))
    print(f"{len(table.df)} terms over {table.doc_count} documents -> {args.output}")


def _translator(args):
    if args.translator == "mock":
        fwd, bwd = {}, {}
        if args.mock_map:
            with open(args.mock_map, encoding="utf-8") as fh:
                maps = json.load(fh)
            fwd, bwd = maps.get("forward", {}), maps.get("backward", {})
        return MockTranslator(fwd, bwd, pivot=args.pivot)
    endpoint = args.endpoint or os.environ.get("TRANSLATOR_ENDPOINT")
    if not endpoint:
        raise UsageError("http translator needs --endpoint or TRANSLATOR_ENDPOINT")
    return HttpTranslator(endpoint, os.environ.get("TRANSLATOR_KEY"), timeout=args.timeout)


def cmd_augment(args, run):
    ds = load_dataset(run.input(args.input), require_labels=False)
    if args.strategy == "tfidf-replace":
        if not args.tfidf:
            raise UsageError("tfidf-replace needs --tfidf")
        table = TfIdfTable.load(run.input(args.tfidf))
        cfg = AugmentConfig(args.p_max, args.pool_fraction, args.seed)
        out = augment_dataset(ds, "tfidf-replace", table=table, vocab=table.vocabulary(args.min_count), cfg=cfg)
    else:
        if args.mock_map:
            run.input(args.mock_map)
        out = augment_dataset(ds, "back-translate", translator=_translator(args), pivot=args.pivot,
                              source=args.source, max_workers=args.workers)
    save_dataset(out, run.output(args.output))
    if args.pairs_out:
        with open(run.output(args.pairs_out), "w", encoding="utf-8", newline="\n") as fh:
            for rec in augmentation_pairs(ds, out):
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    print(f"{len(ds)} -> {len(out)} documents -> {args.output}")


def cmd_featurize(args, run):
    ds = load_dataset(run.input(args.input), require_labels=False)
    ids, labels = [d.id for d in ds.docs], [d.label for d in ds.docs]
    if args.mode == "embeddings":
        if not args.embeddings:
            raise UsageError("featurize embeddings needs --embeddings")
        emb = load_embeddings(run.input(args.embeddings))
        X = doc_matrix(ds.docs, emb)
        desc = embeddings_descriptor(args.embeddings)
    elif args.mode == "tfidf":
        if not args.tfidf:
            raise UsageError("featurize tfidf needs --tfidf")
        table = TfIdfTable.load(run.input(args.tfidf))
        X = tfidf_vectors(ds.docs, table.vocabulary(args.min_count), table)
        desc = tfidf_descriptor(args.tfidf, args.min_count)
    else:
        if not args.layers:
            raise UsageError("featurize layers needs --layers")
        feats = {f.id: f for f in load_layer_features(run.input(args.layers))}
        missing = [i for i in ids if i not in feats]
        if missing:
            raise ContractError(f"layer features missing for {len(missing)} docs, e.g. {missing[0]!r}")
        X = np.vstack([select_layers(feats[i], args.strategy) for i in ids])
        desc = layers_descriptor(args.layers, args.strategy)
    write_features(run.output(args.output), ids, labels, X)
    write_features_meta(run.output(meta_path(args.output)), desc, ds.classes)
    print(f"{X.shape[0]} x {X.shape[1]} features -> {args.output}")


def _model_params(args, kind):
    if kind == "logreg":
        return dict(l2=args.l2, epochs=args.epochs, lr=args.lr, batch_size=args.batch_size)
    if kind == "svm":
        return dict(C=args.C, epochs=args.epochs, lr=args.lr, batch_size=args.batch_size)
    if kind == "rf":
        return dict(n_trees=args.n_trees, max_depth=args.max_depth, min_leaf=args.min_leaf)
    return dict(n_rounds=args.n_rounds, shrinkage=args.shrinkage, max_depth=args.max_depth or 3,
                min_leaf=args.min_leaf)


def cmd_train(args, run):
    data, _, featurizer = load_feature_matrix(run.input(args.features))
    params = _model_params(args, args.model)
    grid_rows = None
    if args.grid or args.grid_file:
        grid = DEFAULT_GRIDS[args.model]
        if args.grid_file:
            with open(run.input(args.grid_file), encoding="utf-8") as fh:
                grid = json.load(fh)
        best, grid_rows = grid_search_cv(args.model, data, GridSpec(grid, args.folds, args.seed))
        params.update(best)
        log.info("grid search best: %s", best)
    model = TRAINERS[args.model](data, seed=args.seed, **params)
    model.featurizer = featurizer
    save_model(model, run.output(args.output))
    if grid_rows is not None:
        names = list(grid_rows[0]["params"])
        with open(run.output(str(args.output) + ".grid.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(names + ["mean_accuracy", "std_accuracy"]) + "\n")
            for row in grid_rows:
                vals = [str(row["params"][n]) for n in names]
                fh.write(",".join(vals + [repr(row["mean"]), repr(row["std"])]) + "\n")
    acc = float(np.mean(model.predict(data.X) == data.y))
    print(f"{args.model} trained on {data.X.shape[0]} rows (train accuracy {acc:.4f}) -> {args.output}")


def cmd_train_uda(args, run):
    data, _, featurizer = load_feature_matrix(run.input(args.labeled))
    u_ids, _, U = read_features(run.input(args.unlabeled))
    row = {i: j for j, i in enumerate(u_ids)}
    orig, aug = [], []
    for lineno, rec in read_jsonl(run.input(args.pairs)):
        try:
            orig.append(row[rec["id"]])
            aug.append(row[rec["aug_id"]])
        except KeyError as exc:
            raise ContractError(f"{args.pairs}: line {lineno}: id {exc} not in unlabeled features") from None
    if U.shape[1] != data.dim:
        raise ContractError("unlabeled features differ in dimension from labeled features")
    cfg = UdaConfig(schedule=args.tsa, total_steps=args.steps, lam=args.lam, temperature=args.temp,
                    confidence=args.conf, sup_batch=args.sup_batch, unsup_batch=args.unsup_batch,
                    lr=args.lr, l2=args.l2, seed=args.seed)
    model = train_uda(data, (U[orig], U[aug]), data.n_classes, cfg)
    model.featurizer = featurizer
    save_model(model, run.output(args.output))
    print(f"uda ({cfg.schedule.value} TSA) on {data.X.shape[0]} labeled / {len(orig)} pairs -> {args.output}")


def cmd_evaluate(args, run):
    model = load_model(run.input(args.model))
    data, ids, _ = load_feature_matrix(run.input(args.features), classes=model.classes)
    scores = class_scores(model, data.X)
    rankings = rankings_from_scores(ids, scores, model.classes)
    gold = {i: model.classes[y] for i, y in zip(ids, data.y)}
    report = build_report(rankings, gold, model.classes, tuple(args.topk))
    out = Path(args.output)
    with open(run.output(out), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    stem = out.with_suffix("")
    with open(run.output(f"{stem}.per_class.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("class,precision,recall,f1,support\n")
        for r in report["per_class"]:
            fh.write(f"{r['class']},{r['precision']!r},{r['recall']!r},{r['f1']!r},{r['support']}\n")
    with open(run.output(f"{stem}.predictions.jsonl"), "w", encoding="utf-8", newline="\n") as fh:
        for r in rankings:
            top = [{"label": c, "score": s} for c, s in r.ranked[:max(args.topk)]]
            fh.write(json.dumps({"id": r.id, "gold": gold[r.id], "predictions": top}, ensure_ascii=False) + "\n")
    per_class_chart(report["per_class"], run.output(f"{stem}.per_class.{args.figure_format}"),
                    fmt=args.figure_format)
    at = "  ".join(f"acc@{k}={v:.4f}" for k, v in report["acc_at"].items())
    print(f"accuracy={report['accuracy']:.4f}  {at}  macro-F1={report['macro']['f1']:.4f}")


def cmd_report_compare(args, run):
    with open(run.input(args.report), encoding="utf-8") as fh:
        report = json.load(fh)
    try:
        model_acc = {r["class"]: float(r["recall"]) for r in report["per_class"]}
    except (KeyError, TypeError, ValueError):
        raise ContractError(f"{args.report}: not an evaluate report") from None
    audit = load_audit(run.input(args.audit))
    prefix = args.output_prefix
    _, summary = comparison_report(model_acc, audit, run.output(f"{prefix}.csv"), run.output(f"{prefix}.svg"))
    print(summary)


def cmd_predict(args, run):
    model = load_model(run.input(args.model))
    if model.featurizer is None:
        raise ContractError(f"{args.model}: model file records no featurizer")
    featurizer = Featurizer(model.featurizer, base_dir=Path(args.model).parent)
    ranked = predict_text(model, featurizer, args.text, args.k)
    if args.json:
        print(json.dumps({"predictions": [{"label": c, "score": s} for c, s in ranked]}, ensure_ascii=False))
    else:
        for c, s in ranked:
            print(f"{c}\t{s:.6f}")


def cmd_serve(args, run):
    from .serve import PredictionService, make_server

    service = PredictionService.from_model_file(run.input(args.model))
    try:
        server = make_server(service, args.host, args.port)
    except OSError as exc:
        raise ContractError(f"cannot bind {args.host}:{args.port}: {exc}") from None
    print(f"serving on http://{args.host}:{server.server_address[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


# -- parser ---------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="udatext", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file of default flag values (flags win)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    seeded = _Parser(add_help=False)
    seeded.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("preprocess", help="normalize and tokenize a raw JSONL dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--allow-unlabeled", action="store_true")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("split", parents=[seeded], help="balanced per-class train/valid/test split")
    p.add_argument("--input", required=True)
    p.add_argument("--per-class", type=_int_list, default=[70, 30, 30], help="train,valid,test counts")
    p.add_argument("--train-out", required=True)
    p.add_argument("--valid-out", required=True)
    p.add_argument("--test-out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train-embeddings", parents=[seeded], help="skip-gram word vectors")
    p.add_argument("--input", required=True, nargs="+")
    p.add_argument("--output", required=True)
    p.add_argument("--dim", type=int, default=600)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.025)
    p.set_defaults(func=cmd_train_embeddings)

    p = sub.add_parser("tfidf", help="document-frequency table")
    p.add_argument("--input", required=True, nargs="+")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_tfidf)

    p = sub.add_parser("augment", parents=[seeded], help="one synthetic copy per document")
    p.add_argument("strategy", choices=["tfidf-replace", "back-translate"])
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--pairs-out")
    p.add_argument("--tfidf")
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--p-max", type=float, default=0.3)
    p.add_argument("--pool-fraction", type=float, default=0.5)
    p.add_argument("--translator", choices=["mock", "http"], default="mock")
    p.add_argument("--mock-map", help='JSON {"forward": {...}, "backward": {...}}')
    p.add_argument("--endpoint")
    p.add_argument("--timeout", type=float, default=10.0)
    p.add_argument("--pivot", default="en")
    p.add_argument("--source", default="pt")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("featurize", help="document vectors")
    p.add_argument("mode", choices=["embeddings", "tfidf", "layers"])
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--tfidf")
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--layers")
    p.add_argument("--strategy", choices=["first", "last", "concat4"], default="last")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", parents=[seeded], help="supervised classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--model", choices=sorted(TRAINERS), default="logreg")
    p.add_argument("--output", required=True)
    p.add_argument("--grid", action="store_true", help="grid search with the default grid")
    p.add_argument("--grid-file", help="JSON {param: [values]} grid")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--max-depth", type=_max_depth, default=None)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--n-rounds", type=int, default=100)
    p.add_argument("--shrinkage", type=float, default=0.1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("train-uda", parents=[seeded], help="semi-supervised consistency training")
    p.add_argument("--labeled", required=True)
    p.add_argument("--unlabeled", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--tsa", choices=[s.value for s in TsaSchedule], default="log")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--temp", type=float, default=0.4)
    p.add_argument("--conf", type=float, default=0.0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--sup-batch", type=int, default=32)
    p.add_argument("--unsup-batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--l2", type=float, default=0.0)
    p.set_defaults(func=cmd_train_uda)

    p = sub.add_parser("evaluate", help="accuracy, acc@k and per-class metrics")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--topk", type=_int_list, default=[1, 3, 5])
    p.add_argument("--figure-format", choices=["svg", "png", "pdf"], default="svg")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report-compare", help="human vs model per-class comparison")
    p.add_argument("--report", required=True)
    p.add_argument("--audit", required=True)
    p.add_argument("--output-prefix", required=True)
    p.set_defaults(func=cmd_report_compare)

    p = sub.add_parser("predict", help="rank classes for one text")
    p.add_argument("--model", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("-k", type=int, default=3)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="HTTP prediction endpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser, sub


def _config_path(sub, argv):
    # only options before the subcommand belong to the top-level parser
    names = sub.choices
    head = []
    for a in argv:
        if a in names:
            break
        head.append(a)
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(head)
    return known.config


def _apply_config(sub, argv, path):
    """Install config values as subcommand defaults so explicit flags still win."""
    command = next((a for a in argv if a in sub.choices), None)
    if command is None:
        return
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    values = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    section = cfg.get(command, {})
    if not isinstance(section, dict):
        raise UsageError(f"config section {command!r} must be a JSON object")
    values.update(section)
    values = {k.replace("-", "_"): v for k, v in values.items()}
    subparser = sub.choices[command]
    dests = {a.dest for a in subparser._actions}
    # top-level keys apply only where the subcommand knows them
    values = {k: v for k, v in values.items() if k in dests or k in section}
    unknown = sorted(set(values) - dests)
    if unknown:
        raise UsageError(f"config keys not valid for {command}: {', '.join(unknown)}")
    # required options satisfied by the config must not trip argparse
    for action in subparser._actions:
        if action.dest in values:
            action.required = False
    subparser.set_defaults(**values)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, sub = build_parser()
    try:
        config = _config_path(sub, argv)
        if config:
            _apply_config(sub, argv, config)
    except UsageError as exc:
        print(f"udatext: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"udatext: error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    run = Run(args)
    try:
        args.func(args, run)
        run.commit()
        return 0
    except UsageError as exc:
        print(f"udatext: error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except (ContractError, TranslatorError, OSError, json.JSONDecodeError) as exc:
        print(f"udatext: error: {exc}", file=sys.stderr)
        code = EXIT_DATA
    except NumericError as exc:
        print(f"udatext: numeric failure: {exc}", file=sys.stderr)
        code = EXIT_NUMERIC
    run.abort()
    return code


if __name__ == "__main__":
    sys.exit(main())
