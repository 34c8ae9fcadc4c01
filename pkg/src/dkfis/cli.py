"""Command-line front end: synth, train, predict, evaluate, sweep-rbf, report.

Exit status is 0 on success, 1 on a usage error and 2 on a data or model error.
"""

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

from .dataset import SyntheticSpec, generate_synthetic, load_csv, split, write_csv
from .errors import DkfisError, NonConvergence
from .pipeline import (
    EvaluationReport,
    ModelBundle,
    evaluate,
    load_config,
    predict_pipeline,
    render_report,
    train_pipeline,
)
from .preprocess import fit_zscore
from .svm import format_sweep, sweep_rbf_width

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; this tool reserves 2 for data errors.
    def parse_known_args(self, args=None, namespace=None):
        if args is not None and self._subparsers is None:
            known = {o for a in self._actions for o in a.option_strings}
            unknown = [t.split("=", 1)[0] for t in args
                       if t.startswith("--") and t.split("=", 1)[0] not in known]
            if unknown:
                self.error(f"unrecognized arguments: {' '.join(unknown)}")
        return super().parse_known_args(args, namespace)

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _widths(text):
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values or any(not v > 0 for v in values):
        raise argparse.ArgumentTypeError("widths must be positive")
    return values


def build_parser():
    p = _Parser(prog="dkfis", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic well-log CSV")
    s.add_argument("--n", type=int, default=SyntheticSpec.n_records, help="number of records")
    s.add_argument("--seed", type=int, default=SyntheticSpec.seed)
    s.add_argument("--zero-fraction", type=float, default=SyntheticSpec.zero_fraction)
    s.add_argument("--noise-sigma", type=float, default=SyntheticSpec.noise_sigma)
    s.add_argument("--n-wells", type=int, default=SyntheticSpec.n_wells)
    s.add_argument("--out", required=True)

    t = sub.add_parser("train", help="train a model bundle on the train split of a CSV")
    t.add_argument("--data", required=True)
    t.add_argument("--config", default="default", help="'default' or a JSON config file")
    t.add_argument("--out", required=True)

    r = sub.add_parser("predict", help="run a bundle over a CSV")
    r.add_argument("--bundle", required=True)
    r.add_argument("--data", required=True)
    r.add_argument("--out", required=True, help="CSV: input columns plus predictions and audit")

    e = sub.add_parser("evaluate", help="four-way evaluation of a bundle")
    e.add_argument("--bundle", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--subset", choices=("test", "all"), default="test",
                   help="'test' re-splits the data with the bundle's split settings")
    e.add_argument("--out", help="write the report as JSON")

    w = sub.add_parser("sweep-rbf", help="g-metric means of the rbf SVM over several widths")
    w.add_argument("--data", required=True)
    w.add_argument("--widths", type=_widths, required=True, help="e.g. 0.5,1,2")
    w.add_argument("--config", default="default")
    w.add_argument("--out")

    o = sub.add_parser("report", help="render a saved evaluation as text tables")
    o.add_argument("--report", required=True)
    o.add_argument("--out")
    return p


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_synth(args):
    spec = SyntheticSpec(n_records=args.n, seed=args.seed, zero_fraction=args.zero_fraction,
                         noise_sigma=args.noise_sigma, n_wells=args.n_wells)
    write_csv(generate_synthetic(spec), args.out)


def cmd_train(args):
    config = load_config(args.config)
    train, _ = split(load_csv(args.data), config.split)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonConvergence)
        bundle = train_pipeline(train, config)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    bundle.save(args.out)


def cmd_predict(args):
    bundle = ModelBundle.load(args.bundle)
    data = load_csv(args.data)
    res = predict_pipeline(bundle, data)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["well_id", "depth", "gamma_ray", "resistivity", "density", "clay_volume",
                      "oil_saturation", "svm_label", "refined_label", "raw_prediction",
                      "refined_prediction", "fired_rule"])
        for i, rec in enumerate(data):
            out.writerow([rec.well_id, "" if rec.depth is None else repr(rec.depth)]
                         + [repr(v) for v in rec.predictors] + [repr(rec.oil_saturation)]
                         + [int(res.svm_label[i]), int(res.refined_label[i]),
                            repr(float(res.raw_prediction[i])),
                            repr(float(res.refined_prediction[i])), res.fired_rule[i]])


def cmd_evaluate(args):
    bundle = ModelBundle.load(args.bundle)
    data = load_csv(args.data)
    if args.subset == "test":
        _, data = split(data, bundle.config.split)
    report = evaluate(bundle, data)
    if args.out:
        Path(args.out).write_text(report.dumps(), encoding="utf-8")
    sys.stdout.write(render_report(report))


def cmd_sweep(args):
    config = load_config(args.config)
    train, test = split(load_csv(args.data), config.split)
    scaler = fit_zscore(train)
    rows = sweep_rbf_width(scaler.transform(train.predictors()), train.labels(config.zero_threshold),
                           scaler.transform(test.predictors()), test.labels(config.zero_threshold),
                           args.widths, config.svm)
    _emit(format_sweep(rows), args.out)


def cmd_report(args):
    try:
        d = json.loads(Path(args.report).read_text(encoding="utf-8"))
        report = EvaluationReport.from_dict(d)
    except (json.JSONDecodeError, TypeError) as exc:
        raise DkfisError(f"{args.report}: not an evaluation report ({exc})") from None
    _emit(render_report(report), args.out)


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "predict": cmd_predict,
            "evaluate": cmd_evaluate, "sweep-rbf": cmd_sweep, "report": cmd_report}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        COMMANDS[args.command](args)
    except DkfisError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        where = f": {exc.filename}" if exc.filename else ""
        print(f"error: {exc.strerror or exc}{where}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
