"""Command-line pipeline: synthesize, subsample, train, classify, evaluate.

Exit codes: 0 success, 1 input parse error, 2 precondition/flag violation,
3 training or root-finding failure.  Diagnostics go to stderr; data goes to
files or stdout, never mixed.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np

from . import data as datamod
from . import evaluate as evalmod
from .border import TrainOptions, border_decision_batch
from .errors import FormatError, PreconditionError, RootFindingError, TrainingError
from .kernel import AgfConfig
from .multiclass import (
    MultiBordersModel,
    PairwiseR,
    _match_label,
    accelerate_svm,
    couple_probabilities,
    deserialize_multi_borders,
    multi_predict,
    serialize_multi_borders,
    train_agf_multi,
)
from .svm import parse_libsvm_model, svm_pairwise_r
from .synth import synth_dataset


def _write_atomic(path: str, content: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None


def _positive_int(value: str) -> int:
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _fraction(value: str) -> float:
    v = float(value)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1), got {v}")
    return v


def _positive_float(value: str) -> float:
    v = float(value)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _residual_audit(model: MultiBordersModel, value_fns) -> None:
    for (i, j, pair_model), value in zip(model.pairs, value_fns):
        residuals = [abs(value(b)) for b in pair_model.points]
        print(
            f"pair {i} {j}: {pair_model.n_borders} borders, "
            f"max residual {max(residuals):.3e}",
            file=sys.stderr,
        )


def cmd_synth(args) -> int:
    d = synth_dataset(args.n, args.seed)
    _write_atomic(args.output, datamod.serialize_libsvm_data(d))
    print(f"wrote {d.n_samples} samples to {args.output}", file=sys.stderr)
    return 0


def cmd_subsample(args) -> int:
    d = datamod.parse_libsvm_data(_read(args.input))
    out = datamod.subsample(d, args.fraction, args.seed)
    _write_atomic(args.output, datamod.serialize_libsvm_data(out))
    print(f"kept {out.n_samples} of {d.n_samples} rows", file=sys.stderr)
    return 0


def cmd_accelerate(args) -> int:
    model = parse_libsvm_model(_read(args.model))
    train = datamod.parse_libsvm_data(_read(args.data))
    opts = TrainOptions(tol=args.tol)
    multi = accelerate_svm(model, train, args.nb, args.seed, opts, n_threads=args.threads)
    from .svm import svm_pair_probability

    _residual_audit(
        multi,
        [
            (lambda b, i=i, j=j: -svm_pair_probability(model, i, j, b))
            for i, j, _ in multi.pairs
        ],
    )
    _write_atomic(args.output, serialize_multi_borders(multi))
    print(
        f"wrote {multi.total_borders} border points ({len(multi.pairs)} pairs) "
        f"to {args.output}",
        file=sys.stderr,
    )
    return 0


def cmd_train_agf(args) -> int:
    train = datamod.parse_libsvm_data(_read(args.data))
    cfg = AgfConfig(total_weight=args.weight, n_neighbours=args.knn)
    opts = TrainOptions(tol=args.tol)
    multi = train_agf_multi(train, cfg, args.nb, args.seed, opts, n_threads=args.threads)
    from .kernel import BinaryProblem, agf_decision

    value_fns = []
    for i, j, _ in multi.pairs:
        problem = BinaryProblem.from_dataset(train, class_minus=i, class_plus=j)
        value_fns.append(lambda b, p=problem: agf_decision(b, p, cfg))
    _residual_audit(multi, value_fns)
    _write_atomic(args.output, serialize_multi_borders(multi))
    print(
        f"wrote {multi.total_borders} border points ({len(multi.pairs)} pairs) "
        f"to {args.output}",
        file=sys.stderr,
    )
    return 0


def _score_and_report(test, model_class_names, predicted_ids, per_point_seconds):
    """Print accuracy/UC diagnostics when the test labels are meaningful."""
    if len(set(test.labels.tolist())) < 2:
        if per_point_seconds is not None:
            print(f"per_point_seconds {per_point_seconds:.3e}", file=sys.stderr)
        return
    try:
        truth = [_match_label(model_class_names, name) for name in test.class_names]
    except PreconditionError:
        return
    truth_ids = np.array([truth[lab] for lab in test.labels])
    c = evalmod.ConfusionMatrix.from_predictions(
        truth_ids, predicted_ids, len(model_class_names)
    )
    for line in evalmod.report_lines(c, per_point_seconds):
        print(line, file=sys.stderr)


def cmd_classify(args) -> int:
    multi = deserialize_multi_borders(_read(args.model))
    test = datamod.parse_libsvm_data(_read(args.data))
    if test.n_features != multi.dim:
        raise PreconditionError(
            f"test data has {test.n_features} features but the model has {multi.dim}"
        )
    lines = []
    predicted = []
    for x in test.features:
        cid, p = multi_predict(multi, x)
        predicted.append(cid)
        if args.prob:
            lines.append(
                multi.class_names[cid] + " " + " ".join(f"{v:.17g}" for v in p)
            )
        else:
            lines.append(multi.class_names[cid])
    _write_atomic(args.output, "\n".join(lines) + "\n")

    per_point = None
    if args.timing:
        def classify_batch(xs):
            for _, _, pair_model in multi.pairs:
                border_decision_batch(pair_model, xs)

        per_point = evalmod.time_classifier(classify_batch, test.features, reps=5)
    _score_and_report(test, multi.class_names, predicted, per_point)
    return 0


def cmd_classify_svm(args) -> int:
    model = parse_libsvm_model(_read(args.model))
    test = datamod.parse_libsvm_data(_read(args.data))
    if test.n_features != model.dim:
        raise PreconditionError(
            f"test data has {test.n_features} features but the model has {model.dim}"
        )
    lines = []
    predicted = []
    for x in test.features:
        r = PairwiseR(svm_pairwise_r(model, x), model.n_classes)
        p = couple_probabilities(r)
        cid = int(np.nonzero(p >= p.max() - 1e-12)[0][0])
        predicted.append(cid)
        if args.prob:
            lines.append(model.labels[cid] + " " + " ".join(f"{v:.17g}" for v in p))
        else:
            lines.append(model.labels[cid])
    _write_atomic(args.output, "\n".join(lines) + "\n")

    per_point = None
    if args.timing:
        def classify_batch(xs):
            for x in xs:
                svm_pairwise_r(model, x)

        per_point = evalmod.time_classifier(classify_batch, test.features, reps=5)
    _score_and_report(test, tuple(model.labels), predicted, per_point)
    return 0


def cmd_evaluate(args) -> int:
    truth_data = datamod.parse_libsvm_data(_read(args.truth))
    pred_names = [ln.split()[0] for ln in _read(args.predictions).splitlines() if ln.strip()]
    if len(pred_names) != truth_data.n_samples:
        raise PreconditionError(
            f"{len(pred_names)} predictions for {truth_data.n_samples} truth rows"
        )
    pred_ids = [_match_label(truth_data.class_names, name) for name in pred_names]
    c = evalmod.ConfusionMatrix.from_predictions(
        truth_data.labels, pred_ids, truth_data.n_classes
    )
    for line in evalmod.report_lines(c):
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="borders",
        description="Accelerate kernel classifiers by sampling the decision border.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the built-in 2-D synthetic class pair")
    p.add_argument("--n", type=_positive_int, default=300, help="number of samples (>= 2)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("-o", "--output", required=True, help="output data file (LIBSVM format)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("subsample", help="rank-preserving per-class subsampling")
    p.add_argument("-i", "--input", required=True, help="input data file (LIBSVM format)")
    p.add_argument("-f", "--fraction", type=_fraction, required=True,
                   help="target retained fraction, in (0, 1)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("-o", "--output", required=True, help="output data file")
    p.set_defaults(func=cmd_subsample)

    p = sub.add_parser("accelerate", help="build a borders model from a trained SVM")
    p.add_argument("--model", required=True, help="LIBSVM model file (c_svc, rbf, with -b 1)")
    p.add_argument("--data", required=True, help="training data file (LIBSVM format)")
    p.add_argument("--nb", type=_positive_int, default=100,
                   help="border points per class pair (>= 1)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--tol", type=_positive_float, default=1e-8,
                   help="decision-value tolerance at each border point (> 0)")
    p.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                   help="worker cap for pair training (>= 1; result is identical)")
    p.add_argument("-o", "--output", required=True, help="output multi-borders model file")
    p.set_defaults(func=cmd_accelerate)

    p = sub.add_parser("train-agf", help="train a borders model on adaptive kernel estimates")
    p.add_argument("--data", required=True, help="training data file (LIBSVM format)")
    p.add_argument("--weight", type=_positive_float, required=True,
                   help="total kernel weight W (> 0; < knn when knn is set)")
    p.add_argument("--knn", type=int, default=0,
                   help="neighbours per kernel sum (0 = all samples)")
    p.add_argument("--nb", type=_positive_int, default=100,
                   help="border points per class pair (>= 1)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--tol", type=_positive_float, default=1e-8,
                   help="decision-value tolerance at each border point (> 0)")
    p.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                   help="worker cap for pair training (>= 1; result is identical)")
    p.add_argument("-o", "--output", required=True, help="output multi-borders model file")
    p.set_defaults(func=cmd_train_agf)

    p = sub.add_parser("classify", help="classify with a multi-borders model")
    p.add_argument("--model", required=True, help="multi-borders model file")
    p.add_argument("--data", required=True, help="test data file (LIBSVM format)")
    p.add_argument("--prob", action="store_true",
                   help="append coupled class probabilities to each prediction")
    p.add_argument("--timing", action="store_true",
                   help="measure per-point classification time (diagnostics)")
    p.add_argument("-o", "--output", required=True, help="output predictions file")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("classify-svm", help="classify directly with a LIBSVM model")
    p.add_argument("--model", required=True, help="LIBSVM model file (c_svc, rbf, with -b 1)")
    p.add_argument("--data", required=True, help="test data file (LIBSVM format)")
    p.add_argument("--prob", action="store_true",
                   help="append coupled class probabilities to each prediction")
    p.add_argument("--timing", action="store_true",
                   help="measure per-point classification time (diagnostics)")
    p.add_argument("-o", "--output", required=True, help="output predictions file")
    p.set_defaults(func=cmd_classify_svm)

    p = sub.add_parser("evaluate", help="score predictions against labeled truth")
    p.add_argument("--truth", required=True, help="labeled data file (LIBSVM format)")
    p.add_argument("--predictions", required=True,
                   help="predictions file (first token per line is the label)")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TrainingError, RootFindingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
