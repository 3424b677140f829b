"""Command-line harness.

  cll run     train and evaluate one experiment configuration
  cll verify  run the numerical identity/bound battery
  cll curves  write per-cell loss-curve CSVs from a JSON report
"""

import argparse
import sys

from . import harness, verify


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    add = parser.add_argument
    add("--config", default=None, help="flat key = value file; flags override it")
    add("--dataset", choices=("blobs", "idx"), default=None)
    add("--k", type=int, default=None)
    add("--d", type=int, default=None)
    add("--n-per-class", dest="n_per_class", type=int, default=None)
    add("--test-n-per-class", dest="test_n_per_class", type=int, default=None)
    add("--separation", type=float, default=None)
    add("--train-images", dest="train_images", default=None)
    add("--train-labels", dest="train_labels", default=None)
    add("--test-images", dest="test_images", default=None)
    add("--test-labels", dest="test_labels", default=None)
    add("--subset", type=int, default=None)
    add("--transition", default=None,
        help="uniform | weak | strong | path to a matrix text file")
    add("--lambda", dest="noise_lambda", type=float, default=None)
    add("--method", choices=harness.METHODS, default=None)
    add("--decoder", choices=("l1", "max"), default=None)
    add("--base", choices=("linear", "mlp"), default=None)
    add("--width", type=int, default=None)
    add("--lr-grid", dest="lr_grid", default=None,
        help="comma-separated learning rates")
    add("--neighbor-grid", dest="neighbor_grid", default=None,
        help="comma-separated neighbor counts (knn)")
    add("--epochs", type=int, default=None)
    add("--batch-size", dest="batch_size", type=int, default=None)
    add("--seeds", default=None,
        help="a count (runs seeds 0..n-1) or a comma-separated list")
    add("--validation-metric", dest="validation_metric",
        choices=("scel", "ure"), default=None)
    add("--validation-fraction", dest="validation_fraction",
        type=float, default=None)
    add("--out", required=True, help="CSV report path")
    add("--json-out", dest="json_out", default=None, help="full JSON report path")
    add("--curves-dir", dest="curves_dir", default=None,
        help="also write loss-curve CSVs here")


def _build_config(args) -> harness.ExperimentConfig:
    mapping = {}
    if args.config:
        mapping.update(harness.parse_config_file(args.config))
    for key in harness.ExperimentConfig.__dataclass_fields__:
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    return harness.config_from_mapping(mapping)


def _cmd_run(args) -> int:
    config = _build_config(args)
    report = harness.run_experiment(config)
    harness.write_report(report, args.out, format="csv")
    if args.json_out:
        harness.write_report(report, args.json_out, format="json")
    if args.curves_dir:
        harness.emit_loss_curves(report, args.curves_dir)
    print(f"{config.method} on {config.dataset} "
          f"(transition={config.transition}, lambda={config.noise_lambda}): "
          f"accuracy {report.mean_accuracy:.4f} +- {report.std_accuracy:.4f} "
          f"over {len(report.selected)} seeds")
    return 0


def _cmd_verify(args) -> int:
    return 0 if verify.run_all(seed=args.seed) else 1


def _cmd_curves(args) -> int:
    report = harness.read_report_json(args.report)
    written = harness.emit_loss_curves(report, args.out_dir)
    print(f"wrote {len(written)} curve files to {args.out_dir}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cll",
        description="Learn classifiers from complementary labels by "
                    "estimating complementary-label probabilities and "
                    "decoding against transition rows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment configuration")
    _add_run_flags(run_p)
    run_p.set_defaults(fn=_cmd_run)

    verify_p = sub.add_parser("verify", help="run the identity/bound battery")
    verify_p.add_argument("--seed", type=int, default=0)
    verify_p.set_defaults(fn=_cmd_verify)

    curves_p = sub.add_parser("curves", help="emit loss-curve CSVs from a report")
    curves_p.add_argument("--report", required=True, help="JSON report path")
    curves_p.add_argument("--out-dir", dest="out_dir", required=True)
    curves_p.set_defaults(fn=_cmd_curves)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # surface a diagnostic, not a traceback
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
