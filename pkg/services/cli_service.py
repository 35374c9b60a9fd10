"""
CLI Service

Command-line surface of the trainer:
- train: fit one tree on a CSV and write the model and its iteration trace
- predict: score a CSV with a saved model
- crossval: k-fold x seeds evaluation with a JSON run report
- synth-bench: ablation of the training variants on generated clustered data
- gen-synthetic: write the clustered dataset to CSV
"""

from __future__ import annotations
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from core.error_types import AppError, ErrorCategory, Result
from core.metrics import r_squared
from core.srt_engine import predict_batch
from core.synthetic import gen_synthetic
from models.report import RunReport
from models.settings import InitStrategy, TrainConfig
from models.tree import TrainedModel
from services.experiment_service import ExperimentService, Variant, fit_full_dataset
from services.export_service import ExportService, trace_path_for
from services.import_service import ImportService
from utils.file_ops import calculate_file_hash
from utils.validators import validate_positive_int

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_NUMERIC_ERROR = 3


def exit_code_for(error: AppError) -> int:
    if error.category is ErrorCategory.NUMERIC:
        return EXIT_NUMERIC_ERROR
    return EXIT_INPUT_ERROR


def _fail(error: AppError) -> int:
    error.log(logger)
    print(f"error: {error.message}", file=sys.stderr)
    return exit_code_for(error)


def predict_raw(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Predictions in original target units for raw feature rows."""
    if model.preprocess is None:
        return predict_batch(model.params, X)
    scaled = model.preprocess.scale_features(X)
    return model.preprocess.destandardize(predict_batch(model.params, scaled))


def _variant(args: argparse.Namespace) -> Variant:
    if getattr(args, "plain", False):
        return Variant.PLAIN
    if getattr(args, "no_reassign", False):
        return Variant.NO_REASSIGN
    return Variant.FULL


def resolve_config(args: argparse.Namespace, defaults: Optional[TrainConfig] = None) -> Result[TrainConfig]:
    """Config file (or ``defaults``) with command-line overrides, validated."""
    if getattr(args, "config", None):
        loaded = ImportService().load_config(Path(args.config))
        if loaded.is_failure():
            return loaded
        config = loaded.unwrap()
    else:
        config = defaults or TrainConfig()
    config = config.with_overrides(depth=getattr(args, "depth", None), seed=getattr(args, "seed", None))
    return config.validate()


def _print_summary(report: RunReport) -> None:
    rows = [summary.to_dict(include_timing=True) for summary in report.summaries()]
    frame = pd.DataFrame(rows, columns=[
        "variant", "n_runs", "mean_r2", "std_r2", "negative_r2_count", "median_gini", "mean_wall_time",
    ])
    print(frame.to_string(index=False, float_format=lambda value: f"{value:.4f}"))


def _finish_report(report: RunReport, out: Optional[str]) -> int:
    _print_summary(report)
    if out:
        written = ExportService().write_report(report, Path(out))
        if written.is_failure():
            return _fail(written.get_error())
        print(f"report: {out}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    if config.is_failure():
        return _fail(config.get_error())
    config = config.unwrap()

    dataset = ImportService().load_csv(Path(args.data))
    if dataset.is_failure():
        return _fail(dataset.get_error())
    dataset = dataset.unwrap()

    fitted = fit_full_dataset(dataset, config, _variant(args))
    if fitted.is_failure():
        return _fail(fitted.get_error())
    model, report = fitted.unwrap()

    out = Path(args.out)
    written = ExportService().write_fit_artifacts(model, report, out)
    if written.is_failure():
        return _fail(written.get_error())

    r2 = r_squared(predict_raw(model, dataset.X), dataset.y)
    print(f"training error: {report.best_error:.10g}")
    print(f"training R2: {r2.unwrap():.6f}" if r2.is_success() else "training R2: undefined")
    print(f"model: {out}")
    print(f"trace: {trace_path_for(out)}")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    importer = ImportService()
    model = importer.load_model(Path(args.model))
    if model.is_failure():
        return _fail(model.get_error())
    model = model.unwrap()

    features = importer.load_features(Path(args.data), model.feature_names)
    if features.is_failure():
        return _fail(features.get_error())

    predictions = predict_raw(model, features.unwrap())
    text = ExportService().write_predictions(
        predictions, Path(args.out) if args.out else None, column=model.target_name
    )
    if text.is_failure():
        return _fail(text.get_error())
    if not args.out:
        sys.stdout.write(text.unwrap())
    return EXIT_OK


def cmd_crossval(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    if config.is_failure():
        return _fail(config.get_error())
    config = config.unwrap()

    counts = validate_positive_int(args.seeds, "seeds").flat_map(
        lambda _: validate_positive_int(args.folds, "folds", minimum=2)
    )
    if counts.is_failure():
        return _fail(counts.get_error())

    data_path = Path(args.data)
    dataset = ImportService().load_csv(data_path)
    if dataset.is_failure():
        return _fail(dataset.get_error())
    digest = calculate_file_hash(data_path)
    if digest.is_failure():
        return _fail(digest.get_error())

    service = ExperimentService(config, max_workers=args.jobs, model_dir=args.model_dir)
    report = service.crossval(dataset.unwrap(), args.folds, args.seeds, variants=(_variant(args),))
    if report.is_failure():
        return _fail(report.get_error())
    report = report.unwrap()
    report.data_path = str(data_path)
    report.data_sha256 = digest.unwrap()
    return _finish_report(report, args.out)


def cmd_synth_bench(args: argparse.Namespace) -> int:
    config = resolve_config(args, defaults=TrainConfig(init_strategy=InitStrategy.RANDOM))
    if config.is_failure():
        return _fail(config.get_error())

    counts = validate_positive_int(args.seeds, "seeds").flat_map(
        lambda _: validate_positive_int(args.folds, "folds", minimum=2)
    )
    if counts.is_failure():
        return _fail(counts.get_error())

    service = ExperimentService(config.unwrap(), max_workers=args.jobs, model_dir=args.model_dir)
    report = service.synth_bench(args.seeds, folds=args.folds)
    if report.is_failure():
        return _fail(report.get_error())
    return _finish_report(report.unwrap(), args.out)


def cmd_gen_synthetic(args: argparse.Namespace) -> int:
    written = ExportService().write_dataset(gen_synthetic(args.seed), Path(args.out))
    if written.is_failure():
        return _fail(written.get_error())
    print(f"data: {args.out}")
    return EXIT_OK


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value training configuration")
    parser.add_argument("--depth", type=int, help="tree depth D (overrides the config)")
    parser.add_argument("--seed", type=int, help="random seed (overrides the config)")


def _add_variant_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--no-reassign", action="store_true", help="turn the imbalance heuristic off")
    group.add_argument("--plain", action="store_true", help="full-gradient Armijo descent instead of decomposition")


def _add_pool_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker threads")
    parser.add_argument("--model-dir", help="directory receiving one model file per run")
    parser.add_argument("--out", help="report JSON path; wall times go to <report>.timing.json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softtree",
        description="Soft regression trees trained by node decomposition.",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log every inner iteration")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="fit a tree on a CSV file")
    train.add_argument("--data", required=True, help="CSV with a header; last column is the response")
    train.add_argument("--out", default="model.json", help="model JSON path; the trace is written beside it")
    _add_config_options(train)
    _add_variant_options(train)
    train.set_defaults(handler=cmd_train)

    predict = commands.add_parser("predict", help="score a CSV with a saved model")
    predict.add_argument("--model", required=True, help="model JSON written by train")
    predict.add_argument("--data", required=True, help="CSV with the model's features")
    predict.add_argument("--out", help="predictions CSV (default: stdout)")
    predict.set_defaults(handler=cmd_predict)

    crossval = commands.add_parser("crossval", help="k-fold cross-validation over several seeds")
    crossval.add_argument("--data", required=True)
    crossval.add_argument("--folds", type=int, default=4)
    crossval.add_argument("--seeds", type=int, default=20)
    _add_config_options(crossval)
    _add_variant_options(crossval)
    _add_pool_options(crossval)
    crossval.set_defaults(handler=cmd_crossval)

    bench = commands.add_parser("synth-bench", help="compare the training variants on clustered data")
    bench.add_argument("--folds", type=int, default=4, help="one fold of each dataset is held out")
    bench.add_argument("--seeds", type=int, default=20)
    _add_config_options(bench)
    _add_pool_options(bench)
    bench.set_defaults(handler=cmd_synth_bench)

    synthetic = commands.add_parser("gen-synthetic", help="write the clustered dataset to CSV")
    synthetic.add_argument("--seed", type=int, default=0)
    synthetic.add_argument("--out", required=True)
    synthetic.set_defaults(handler=cmd_gen_synthetic)

    return parser


def dispatch(args: argparse.Namespace) -> int:
    return args.handler(args)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv`` and run the selected command; returns the process exit code."""
    return dispatch(build_parser().parse_args(argv))
