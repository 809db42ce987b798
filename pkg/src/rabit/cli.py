import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from rabit.config import ModelConfig, TrainConfig, config_hash, load_dataset_spec, load_train_config
from rabit.data import DiskDataset, training_dataset, write_dataset
from rabit.diagnostics import SUITES, run_gradcheck
from rabit.engine.gradcheck import assert_gradcheck
from rabit.errors import RabitError
from rabit.metrics import MetricsReport, RunSummary
from rabit.telemetry.logs import Logs
from rabit.training.complexity import ablation_table, count_params_flops, repeat_trend
from rabit.training.evaluate import evaluate
from rabit.training.trainer import train

logger = logging.getLogger(__name__)

LOG_FORMAT = "[%(asctime)s] %(levelname)s - %(name)s:%(lineno)d - %(message)s"
PRESETS = ("tiny", "full")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rabit", description="Reverse-attention BiFPN segmentation")
    parser.add_argument("--log-level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    commands = parser.add_subparsers(dest="command", required=True)

    train_cmd = commands.add_parser("train", help="train a model and write checkpoints")
    train_cmd.add_argument("--config", required=True, type=Path)
    train_cmd.add_argument("--out", required=True, type=Path)
    train_cmd.add_argument("--seeds", nargs="+", type=int, help="one run per seed, written to <out>/seed-<s>")

    eval_cmd = commands.add_parser("eval", help="score checkpoints on cached datasets")
    eval_cmd.add_argument("--checkpoint", required=True, nargs="+", type=Path)
    eval_cmd.add_argument("--data", required=True, nargs="+", type=Path)
    eval_cmd.add_argument("--report", required=True, type=Path)
    eval_cmd.add_argument("--config", type=Path, help="train config whose model hash the checkpoints must match")
    eval_cmd.add_argument("--input-size", type=int)

    stats_cmd = commands.add_parser("stats", help="parameter and FLOP accounting")
    stats_cmd.add_argument("--config", required=True, help="train config file or a preset name (tiny, full)")
    stats_cmd.add_argument("--input-size", type=int, default=352)
    stats_cmd.add_argument("--ablation", action="store_true")
    stats_cmd.add_argument("--repeats", nargs="+", type=int)

    data_cmd = commands.add_parser("gen-data", help="synthesize and split a phantom dataset")
    data_cmd.add_argument("--spec", required=True, type=Path)
    data_cmd.add_argument("--out", required=True, type=Path)

    grad_cmd = commands.add_parser("gradcheck", help="finite-difference checks of the engine")
    grad_cmd.add_argument("--module", choices=tuple(SUITES))

    return parser


def run_train(config_path: Path, out: Path, seeds: Optional[Sequence[int]] = None) -> List[Path]:
    config = load_train_config(config_path)
    if not seeds:
        return [train(config, training_dataset(config.data), out)]

    checkpoints = []
    for seed in seeds:
        seeded = TrainConfig.parse_obj({**config.dict(), "seed": seed})
        checkpoints.append(train(seeded, training_dataset(seeded.data), out / ("seed-%d" % seed)))
    return checkpoints


def report_stem(report: Path, dataset: str, run: Optional[int]) -> Path:
    """`report` itself for a single run on a single dataset, otherwise suffixed by dataset and run."""
    stem = report.with_suffix("")
    if dataset:
        stem = stem.with_name("%s-%s" % (stem.name, dataset))
    if run is not None:
        stem = stem.with_name("%s-run%d" % (stem.name, run))
    return stem


def run_eval(
    checkpoints: Sequence[Path],
    data_dirs: Sequence[Path],
    report: Path,
    config_path: Optional[Path] = None,
    input_size: Optional[int] = None,
) -> Dict[str, MetricsReport]:
    expected = None if config_path is None else config_hash(load_train_config(config_path).model)
    report.parent.mkdir(parents=True, exist_ok=True)
    single = len(checkpoints) == 1 and len(data_dirs) == 1

    written: Dict[str, MetricsReport] = {}
    for data_dir in data_dirs:
        dataset = DiskDataset(data_dir)
        runs: Dict[str, MetricsReport] = {}

        for run, checkpoint in enumerate(checkpoints):
            result = evaluate(checkpoint, dataset, expected_hash=expected, input_size=input_size)
            stem = report_stem(report, "" if single else dataset.name, None if len(checkpoints) == 1 else run)
            result.write_json(stem.with_suffix(".json"))
            result.write_csv(stem.with_suffix(".csv"))
            logger.info(Logs.RABIT_REPORT_WRITTEN, extra={"path": str(stem.with_suffix(".json"))})
            runs[str(checkpoint)] = result
            written[str(stem)] = result

        if len(checkpoints) > 1:
            base = report_stem(report, dataset.name, None)
            summary_path = base.with_name("%s-runs.json" % base.name)
            summary_path.write_text(RunSummary.from_reports(runs).json(indent=2) + "\n", encoding="utf-8")
            logger.info(Logs.RABIT_REPORT_WRITTEN, extra={"path": str(summary_path)})

    return written


def resolve_model(config: str) -> ModelConfig:
    if config in PRESETS:
        return ModelConfig.preset(config)
    return load_train_config(config).model


def run_stats(config: str, input_size: int, ablation: bool = False, repeats: Optional[Sequence[int]] = None) -> None:
    model = resolve_model(config)
    report = count_params_flops(model, input_size)

    print("input %dx%d  params %d  GFLOPs %.3f" % (input_size, input_size, report.params, report.gflops))
    for name, component in report.components.items():
        print("  %-8s params %d  GFLOPs %.3f" % (name, component.params, component.flops / 1e9))
    if report.elementwise:
        print("  not counted in FLOPs (output elements): %s" % ", ".join(
            "%s=%d" % item for item in sorted(report.elementwise.items())
        ))

    if ablation:
        print("\n%-22s %12s %10s" % ("model", "params", "GFLOPs"))
        for row in ablation_table(model, input_size):
            print("%-22s %12d %10.3f" % (row["model"], row["params"], row["gflops"]))

    if repeats:
        print("\n%-8s %12s %10s" % ("repeats", "params", "GFLOPs"))
        for row in repeat_trend(model, repeats, input_size):
            print("%-8d %12d %10.3f" % (row["repeats"], row["params"], row["gflops"]))


def run_gen_data(spec_path: Path, out: Path) -> Dict[str, Path]:
    return write_dataset(out, load_dataset_spec(spec_path))


def run_gradcheck_command(module: Optional[str] = None) -> None:
    results = run_gradcheck(module)
    for result in results:
        status = "ok" if result.passed else "FAILED"
        print("%-24s max_rel_err %.3e  (tol %.0e, %d checks)  %s" % (
            result.name, result.max_error, result.tolerance, result.checked, status
        ))

    for result in results:
        assert_gradcheck(result)


def main(argv: Optional[Sequence[str]] = None) -> None:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT, datefmt="%H:%M:%S")

    try:
        if args.command == "train":
            run_train(args.config, args.out, args.seeds)
        elif args.command == "eval":
            run_eval(args.checkpoint, args.data, args.report, args.config, args.input_size)
        elif args.command == "stats":
            run_stats(args.config, args.input_size, args.ablation, args.repeats)
        elif args.command == "gen-data":
            run_gen_data(args.spec, args.out)
        elif args.command == "gradcheck":
            run_gradcheck_command(args.module)
    except RabitError as exc:
        logger.error(Logs.RABIT_COMMAND_FAILED, exc_info=exc, extra={"command": args.command})
        sys.exit(1)
