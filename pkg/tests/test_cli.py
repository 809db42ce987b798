import json
from pathlib import Path

import pytest
import yaml

from rabit.cli import build_parser, main, report_stem
from rabit.data import DiskDataset
from rabit.metrics import MetricsReport, RunSummary
from rabit.training import evaluate
from rabit.training.checkpoint import load_checkpoint


def write_yaml(path, document):
    path.write_text(yaml.safe_dump(document), encoding="utf-8")
    return path


@pytest.fixture
def phantoms(tmp_path):
    spec = write_yaml(tmp_path / "data.yaml", {"spec": {"size": 32, "seed": 1}, "num_samples": 6, "holdout": 0.5})
    main(["gen-data", "--spec", str(spec), "--out", str(tmp_path / "data")])
    return tmp_path / "data"


@pytest.fixture
def train_yaml(tmp_path, phantoms, micro_config):
    document = {
        "version": 1,
        "model": json.loads(micro_config.json()),
        "data": {"data_dir": str(phantoms / "train"), "augmentation": None},
        "epochs": 1,
        "batch_size": 3,
        "scales": [32],
        "prefetch": 0,
    }
    return write_yaml(tmp_path / "train.yaml", document)


def test_gen_data_writes_train_and_val(phantoms):
    assert sorted(path.name for path in phantoms.iterdir()) == ["train", "val"]
    assert len(json.loads((phantoms / "train" / "manifest.json").read_text())["ids"]) == 3


def test_train_then_eval(tmp_path, phantoms, train_yaml):
    main(["train", "--config", str(train_yaml), "--out", str(tmp_path / "run")])
    main(
        [
            "eval",
            "--checkpoint", str(tmp_path / "run" / "last.ckpt"),
            "--data", str(phantoms / "val"),
            "--report", str(tmp_path / "reports" / "report.json"),
            "--config", str(train_yaml),
        ]
    )

    report = MetricsReport.parse_file(tmp_path / "reports" / "report.json")
    assert report.dataset == "val"
    assert len(report.per_image) == 3
    assert (tmp_path / "reports" / "report.csv").exists()


def test_seeded_runs_and_multi_run_summary(tmp_path, phantoms, train_yaml):
    main(["train", "--config", str(train_yaml), "--out", str(tmp_path / "runs"), "--seeds", "0", "1"])
    checkpoints = [str(tmp_path / "runs" / ("seed-%d" % seed) / "last.ckpt") for seed in (0, 1)]

    main(
        ["eval", "--checkpoint", *checkpoints, "--data", str(phantoms / "val"), str(phantoms / "train")]
        + ["--report", str(tmp_path / "report.json")]
    )

    names = {path.name for path in tmp_path.iterdir()}
    assert {"report-val-run0.json", "report-val-run1.csv", "report-train-run1.json"} <= names
    summary = RunSummary.parse_file(tmp_path / "report-val-runs.json")
    assert summary.reports == checkpoints


def test_hash_mismatch_exits_with_an_error(tmp_path, phantoms, train_yaml):
    main(["train", "--config", str(train_yaml), "--out", str(tmp_path / "run")])
    other = write_yaml(tmp_path / "other.yaml", {"model": "tiny"})

    with pytest.raises(SystemExit) as excinfo:
        main(
            [
                "eval",
                "--checkpoint", str(tmp_path / "run" / "last.ckpt"),
                "--data", str(phantoms / "val"),
                "--report", str(tmp_path / "report.json"),
                "--config", str(other),
            ]
        )

    assert excinfo.value.code == 1
    assert not (tmp_path / "report.json").exists()


def test_stats_prints_the_tables(capsys):
    main(["stats", "--config", "tiny", "--input-size", "64", "--ablation", "--repeats", "1", "2"])

    out = capsys.readouterr().out
    assert out.startswith("input 64x64")
    assert "RaBiT w/ bottleneck" in out
    assert "not counted in FLOPs" in out
    assert len([line for line in out.splitlines() if line.split()[:1] in (["1"], ["2"])]) == 2


def test_gradcheck_command(capsys):
    main(["gradcheck", "--module", "ra_binary"])

    assert "ra_sigmoid_n1" in capsys.readouterr().out


def test_report_stem():
    report = Path("out/report.json")

    assert report_stem(report, "", None) == Path("out/report")
    assert report_stem(report, "val", None) == Path("out/report-val")
    assert report_stem(report, "val", 2) == Path("out/report-val-run2")


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_eval_normalizes_like_training(tmp_path, phantoms, train_yaml):
    document = yaml.safe_load(train_yaml.read_text(encoding="utf-8"))
    document["data"].update({"mean": [0.2, 0.3, 0.4], "std": [0.5, 0.5, 0.5]})
    custom = write_yaml(tmp_path / "custom.yaml", document)
    main(["train", "--config", str(custom), "--out", str(tmp_path / "run")])
    checkpoint = tmp_path / "run" / "last.ckpt"

    main(
        ["eval", "--checkpoint", str(checkpoint), "--data", str(phantoms / "val")]
        + ["--report", str(tmp_path / "r.json")]
    )

    direct = evaluate(checkpoint, DiskDataset(phantoms / "val"), mean=(0.2, 0.3, 0.4), std=(0.5, 0.5, 0.5))
    assert MetricsReport.parse_file(tmp_path / "r.json").per_image == direct.per_image
    assert load_checkpoint(checkpoint).extra["mean"] == [0.2, 0.3, 0.4]


def test_eval_on_an_empty_split_exits_with_an_error(tmp_path, train_yaml):
    spec = write_yaml(tmp_path / "all.yaml", {"spec": {"size": 32, "seed": 1}, "num_samples": 3, "holdout": 1.0})
    main(["gen-data", "--spec", str(spec), "--out", str(tmp_path / "full")])
    main(["train", "--config", str(train_yaml), "--out", str(tmp_path / "run")])

    with pytest.raises(SystemExit) as excinfo:
        main(
            ["eval", "--checkpoint", str(tmp_path / "run" / "last.ckpt"), "--data", str(tmp_path / "full" / "val")]
            + ["--report", str(tmp_path / "r.json")]
        )

    assert excinfo.value.code == 1
