"""Command-line driver: vectorize, train, predict, evaluate, rank."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import formats
from .cascade import CascadeConfig, train_cascade
from .core import Dataset
from .errors import ContractViolation
from .evaluation import (
    MulticlassModel,
    accuracy,
    aggregate_entities,
    confusion,
    predict_multiclass_many,
    rank_entities,
    ranking_csv,
    render_ranking,
    train_multiclass,
)
from .solver import KernelSpec, SolverConfig, predict_many, train_binary
from .text import StopwordList, fit_vocabulary, messages_to_dataset, preprocess, vectorize

log = logging.getLogger("mrsvm")

FORMATS = ("sparse_svm", "messages_tsv")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return value


def _non_negative_float(text):
    value = float(text)
    if not value >= 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"must be a non-negative number, got {text}")
    return value


def _add_stopword_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--stopwords", type=Path, help="stopword file, one word per line (default: built-in Turkish list)")
    g.add_argument("--no-stopwords", action="store_true", help="keep stopwords")


def _add_vocab_args(p):
    p.add_argument("--min-df", type=_positive_int, default=2, help="minimum document frequency (default 2)")
    p.add_argument("--max-features", type=_positive_int, default=None, help="keep at most this many terms")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrsvm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vectorize", help="messages TSV -> vocabulary + sparse dataset")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--vocab-out", type=Path, required=True)
    p.add_argument("--data-out", type=Path, required=True)
    _add_vocab_args(p)
    _add_stopword_args(p)

    p = sub.add_parser("train", help="dataset -> model")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--format", choices=FORMATS, default="sparse_svm")
    p.add_argument("--model-out", type=Path, required=True)
    p.add_argument("--vocab-out", type=Path, help="where to write the vocabulary (messages_tsv input)")
    p.add_argument("--partitions", type=_positive_int, default=1, help="number of data partitions (default 1)")
    p.add_argument("--monolithic", action="store_true", help="train one SVM on all data, no partitioning")
    p.add_argument("--gamma", type=_non_negative_float, default=0.0, help="risk-change stopping threshold")
    p.add_argument("--max-iterations", type=_positive_int, default=20)
    p.add_argument("--c", type=_positive_float, default=1.0, help="soft-margin penalty C")
    p.add_argument("--kernel", choices=("linear", "rbf"), default="linear")
    p.add_argument("--rbf-gamma", type=_positive_float, default=None, help="RBF kernel width (rbf only)")
    p.add_argument("--kkt-tolerance", type=_positive_float, default=1e-3)
    p.add_argument("--max-passes", type=_positive_int, default=10)
    p.add_argument("--loss", choices=("zero_one", "hinge"), default="zero_one")
    p.add_argument("--strategy", choices=("stratified", "round_robin"), default="stratified")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--backend", choices=("thread", "process"), default="thread")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--multiclass", action="store_true", help="one-vs-rest over every label present")
    _add_vocab_args(p)
    _add_stopword_args(p)

    p = sub.add_parser("predict", help="model + data -> predictions CSV")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--format", choices=FORMATS, default="sparse_svm")
    p.add_argument("--vocab", type=Path, help="vocabulary file (messages_tsv input)")
    p.add_argument("--output", type=Path, required=True)
    _add_stopword_args(p)

    p = sub.add_parser("evaluate", help="predictions + labels -> confusion matrix")
    p.add_argument("--predictions", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True, help="labeled data the predictions were made on")
    p.add_argument("--format", choices=FORMATS, default="sparse_svm")
    p.add_argument("--csv-out", type=Path)
    p.add_argument("--percent", action="store_true", help="show cells as percentages of the total")

    p = sub.add_parser("rank", help="predictions -> per-entity polarity table")
    p.add_argument("--predictions", type=Path, required=True)
    p.add_argument("--by", choices=("total", "positive", "negative", "neutral"), default="total")
    p.add_argument("--top", type=_positive_int, default=None)
    p.add_argument("--csv-out", type=Path)
    return parser


def _stopwords(args):
    if args.no_stopwords:
        return None
    if args.stopwords is not None:
        return StopwordList.from_file(args.stopwords)
    return StopwordList.default()


def _solver_config(args) -> SolverConfig:
    kernel = KernelSpec("rbf", args.rbf_gamma) if args.kernel == "rbf" else KernelSpec()
    return SolverConfig(c=args.c, kernel=kernel, kkt_tolerance=args.kkt_tolerance,
                        max_passes=args.max_passes, seed=args.seed)


def cmd_vectorize(args):
    stops = _stopwords(args)
    messages = formats.read_messages(args.input)
    if not messages:
        raise ContractViolation(f"{args.input}: no messages")
    vocab = fit_vocabulary(messages, stops, args.min_df, args.max_features)
    data = messages_to_dataset(messages, vocab, stops)
    formats.save_vocabulary(args.vocab_out, vocab)
    formats.write_sparse(args.data_out, data)
    skipped = len(messages) - len(data)
    print(f"{len(messages)} messages, {len(vocab)} terms, {len(data)} labeled samples written"
          + (f" ({skipped} unlabeled skipped)" if skipped else ""))


def _train_one(data: Dataset, solver: SolverConfig, cascade: CascadeConfig | None):
    if cascade is None:
        return train_binary(data, solver), None
    return train_cascade(data, cascade)


def _report_state(name, state):
    if state is None:
        return
    risks = " ".join(f"{r:.6f}" for r in state.risk_history)
    status = "converged" if state.converged else "not converged"
    print(f"{name}: {state.iteration} iterations, {len(state.global_svs)} global SVs, {status}, risk history: {risks}")


def cmd_train(args):
    solver = _solver_config(args)
    cascade = None
    if not args.monolithic:
        cascade = CascadeConfig(num_partitions=args.partitions, gamma=args.gamma,
                                max_iterations=args.max_iterations, solver=solver, risk_loss=args.loss,
                                partition_strategy=args.strategy, seed=args.seed, workers=args.workers,
                                backend=args.backend)

    if args.format == "messages_tsv":
        stops = _stopwords(args)
        messages = formats.read_messages(args.input)
        vocab = fit_vocabulary(messages, stops, args.min_df, args.max_features)
        data = messages_to_dataset(messages, vocab, stops)
        formats.save_vocabulary(args.vocab_out, vocab)
    else:
        data = formats.read_sparse(args.input)
    if len(data) == 0:
        raise ContractViolation(f"{args.input}: no labeled samples")

    if args.multiclass:
        classes = data.classes()
        states = []

        def trainer(binary_data):
            model, state = _train_one(binary_data, solver, cascade)
            states.append(state)
            return model

        model = train_multiclass(data, classes, trainer)
        for cls, state in zip(classes, states):
            _report_state(f"class {cls:+d}" if cls else "class 0", state)
        sv_total = sum(len(m.support_samples) for m in model.per_class_models)
        print(f"trained one-vs-rest model over classes {classes}: {sv_total} support vectors")
    else:
        if 0 in data.labels:
            raise ContractViolation("data contains neutral (0) labels; use --multiclass")
        model, state = _train_one(data, solver, cascade)
        _report_state("cascade", state)
        print(f"trained binary model: {len(model.support_samples)} support vectors, bias {model.bias:.6f}")
    formats.save_model(args.model_out, model)


def cmd_predict(args):
    model = formats.load_model(args.model)
    dimension = model.dimension
    if args.format == "messages_tsv":
        vocab = formats.load_vocabulary(args.vocab)
        if len(vocab) != dimension:
            raise ContractViolation(f"vocabulary has {len(vocab)} terms but the model expects {dimension}")
        stops = _stopwords(args)
        messages = formats.read_messages(args.input)
        ids = [m.id for m in messages]
        keys = [m.entity_key for m in messages]
        vectors = [vectorize(preprocess(m.text, stops), vocab) for m in messages]
    else:
        data = formats.read_sparse(args.input, dimension=dimension)
        ids = data.ids
        keys = [""] * len(data)
        vectors = [s.features for s in data]
    if isinstance(model, MulticlassModel):
        predicted = predict_multiclass_many(model, vectors)
    else:
        predicted = predict_many(model, vectors)
    formats.write_predictions(args.output, zip(ids, keys, predicted))
    print(f"{len(predicted)} predictions written to {args.output}")


def cmd_evaluate(args):
    predictions = formats.read_predictions(args.predictions)
    if args.format == "messages_tsv":
        truth = {m.id: m.label for m in formats.read_messages(args.labels) if m.label is not None}
    else:
        truth = {s.id: s.label for s in formats.read_sparse(args.labels)}
    actual, predicted = [], []
    for sample_id, _, p in predictions:
        if sample_id in truth:
            actual.append(truth[sample_id])
            predicted.append(p)
    if not actual:
        raise ContractViolation("no prediction matches a labeled sample id")
    classes = sorted(set(actual) | set(predicted))
    cm = confusion(actual, predicted, classes)
    print(cm.render(percent=args.percent))
    print(f"accuracy {accuracy(cm):.4f} over {cm.total} samples")
    if args.csv_out is not None:
        args.csv_out.write_text(cm.to_csv(), encoding="utf-8")


def cmd_rank(args):
    rows = [(key, p) for _, key, p in formats.read_predictions(args.predictions)]
    entities = rank_entities(aggregate_entities(rows), args.by)
    if args.top is not None:
        entities = entities[: args.top]
    classes = sorted({p for _, p in rows}) or [-1, 1]
    print(render_ranking(entities, classes))
    if args.csv_out is not None:
        args.csv_out.write_text(ranking_csv(entities, classes), encoding="utf-8")


COMMANDS = {
    "vectorize": cmd_vectorize,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "rank": cmd_rank,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "train":
        if args.kernel == "rbf" and args.rbf_gamma is None:
            parser.error("--kernel rbf requires --rbf-gamma")
        if args.kernel == "linear" and args.rbf_gamma is not None:
            parser.error("--rbf-gamma only applies to --kernel rbf")
        if args.format == "messages_tsv" and args.vocab_out is None:
            parser.error("--vocab-out is required for messages_tsv input")
    if args.command == "predict" and args.format == "messages_tsv" and args.vocab is None:
        parser.error("--vocab is required for messages_tsv input")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"mrsvm: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
