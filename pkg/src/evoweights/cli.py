"""Command line entry point: ``evoweights {weights,run,compare,report,table,synth}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dataset import DatasetSchema, build_group_index, load_csv, make_biased_dataset, write_csv
from .errors import ConfigError, DataError, EvoWeightsError
from .harness import ExperimentConfig, Method, compare, load_result, result_dir, run_experiment
from .metrics import MetricPair
from .model import ModelSpec
from .plots import emit_plots
from .reweight import deterministic_weights, equal_weights
from .stats import StatReport, format_table

log = logging.getLogger("evoweights")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4


def _load(args):
    schema = DatasetSchema.from_json(args.schema)
    return load_csv(args.data, schema, name=getattr(args, "name", None)), schema


def cmd_weights(args) -> int:
    ds, _ = _load(args)
    gi = build_group_index(ds)
    sw = deterministic_weights(ds, gi) if args.method == "dw" else equal_weights(gi)
    text = sw.to_json(ds.code_books) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_run(args) -> int:
    if args.seed < 0:
        raise ConfigError("--seed must be nonnegative")
    ds, schema = _load(args)
    model = ModelSpec.logistic() if args.model == "logistic" else ModelSpec.forest()
    cfg = ExperimentConfig(
        method=Method(args.method),
        metric_pair=MetricPair.parse(args.predictive, args.fairness),
        data_path=str(args.data),
        schema=schema,
        dataset_name=ds.name,
        replicates=args.replicates,
        evaluation_budget=args.budget,
        model=model,
        pop_size=args.pop_size,
        cv_folds=args.cv_folds,
        test_fraction=args.test_fraction,
        undersample_train=args.undersample,
        master_seed=args.seed,
        output_dir=str(args.out),
    )
    result = run_experiment(cfg, ds)
    hv = result.hypervolumes
    print(f"{result_dir(cfg)}: {len(hv)} replicates, median hypervolume {float(sorted(hv)[len(hv) // 2]):.6f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    results = [load_result(d) for d in args.results]
    report = compare(results, alpha=args.alpha)
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    sys.stdout.write(format_table([report]))
    return EXIT_OK


def cmd_report(args) -> int:
    results = [load_result(d) for d in args.results]
    for path in emit_plots(results, args.out):
        print(path)
    return EXIT_OK


def cmd_table(args) -> int:
    reports = [StatReport.from_dict(json.loads(Path(p).read_text())) for p in args.reports]
    sys.stdout.write(format_table(reports))
    return EXIT_OK


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds = make_biased_dataset(args.rows, args.flip_rate, seed=args.seed)
    schema = write_csv(ds, out / "synthetic_biased.csv")
    (out / "synthetic_biased.schema.json").write_text(json.dumps(schema.to_dict(), indent=2) + "\n")
    print(out / "synthetic_biased.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evoweights", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("--data", required=True, help="CSV file with a header row")
        p.add_argument("--schema", required=True, help="JSON schema naming target and sensitive columns")
        p.add_argument("--name", help="dataset name used in output paths (default: CSV stem)")

    p = sub.add_parser("weights", help="print slot weights as JSON")
    data_args(p)
    p.add_argument("--method", choices=["dw", "eq"], default="dw")
    p.add_argument("--out")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("run", help="run one method on one dataset and metric pair")
    data_args(p)
    p.add_argument("--method", choices=[m.value for m in Method], required=True)
    p.add_argument("--predictive", choices=["acc", "roc"], default="acc")
    p.add_argument("--fairness", choices=["dpd", "sfn"], default="dpd")
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--budget", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-fraction", type=float, default=0.25)
    p.add_argument("--undersample", action="store_true", help="balance classes in each training split")
    p.add_argument("--model", choices=["logistic", "forest"], default="logistic")
    p.add_argument("--pop-size", type=int, default=20)
    p.add_argument("--cv-folds", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="significance report for three result directories")
    p.add_argument("results", nargs=3, help="result directories for eq, dw and ew")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="hypervolume CSV and SVG strip plots")
    p.add_argument("results", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("table", help="merge compare reports into one dataset x metric table")
    p.add_argument("reports", nargs="+")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("synth", help="write a synthetic dataset with injected label bias")
    p.add_argument("--out", required=True)
    p.add_argument("--rows", type=int, default=600)
    p.add_argument("--flip-rate", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except EvoWeightsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    except Exception as exc:  # noqa: BLE001
        log.exception("run failed")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
