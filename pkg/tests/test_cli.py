import csv
import json

import pytest

from skewnet.cli import build_parser, main
from skewnet.metrics import parse_report

from conftest import tiny_raw

STAGES = ["synth-data", "preprocess", "train-ae", "train-vae", "augment", "encode"]


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "tiny.json"
    raw = tiny_raw(weights={"search": {"max_iterations": 2, "patience": 1, "train": {"epochs": 1}}})
    path.write_text(json.dumps(raw))
    return path


def run(*argv):
    return main([str(a) for a in argv])


def snapshot(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.is_file()}


def pipeline(config, out):
    for stage in STAGES:
        assert run(stage, "--config", config, "--out", out) == 0, stage
    assert run("search-weights", "--config", config, "--out", out) == 0
    assert run("train", "--config", config, "--out", out, "--train", out / "train_aug.latent.csv", "--weights", out / "weights.json") == 0
    assert run("evaluate", "--config", config, "--out", out, "--format", "machine") == 0


class TestParser:
    def test_subcommands(self):
        sub = next(a for a in build_parser()._actions if a.dest == "command")
        assert set(sub.choices) == {
            "synth-data", "preprocess", "train-ae", "encode", "train-vae", "augment",
            "search-weights", "train", "evaluate", "experiment",
        }

    def test_global_flags(self):
        args = build_parser().parse_args(["train", "--config", "c.json", "--seed", "7", "--out", "o", "--format", "machine"])
        assert (args.config, args.seed, args.out, args.format) == ("c.json", 7, "o", "machine")

    def test_bad_format_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["evaluate", "--format", "xml"])
        assert exc.value.code == 2


class TestPipeline:
    def test_stage_by_stage(self, config_file, tmp_path, capsys):
        out = tmp_path / "out"
        pipeline(config_file, out)
        expected = {
            "data.csv", "train.csv", "test.csv", "scaler.json", "manifest.json", "ae.skwn", "vae_r.skwn",
            "train_aug.csv", "train.latent.csv", "test.latent.csv", "train_aug.latent.csv",
            "weights.json", "search_trace.csv", "classifier_DNN.skwn", "report.txt",
        }
        assert set(snapshot(out)) == expected
        report = parse_report((out / "report.txt").read_text())
        assert report.class_names == ["a", "b", "r"]
        with (out / "train_aug.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert sum(r["synthetic"] == "1" for r in rows) == 24
        assert "format = skewnet-metrics/1" in capsys.readouterr().out

    def test_byte_identical_rerun(self, config_file, tmp_path):
        pipeline(config_file, tmp_path / "a")
        pipeline(config_file, tmp_path / "b")
        assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")

    def test_experiment_deterministic(self, config_file, tmp_path, capsys):
        for name in ("a", "b"):
            assert run("experiment", "--config", config_file, "--out", tmp_path / name, "--self-check", "--format", "machine") == 0
        first, second = snapshot(tmp_path / "a"), snapshot(tmp_path / "b")
        assert first == second and "result.txt" in first

    def test_seed_override(self, config_file, tmp_path):
        run("synth-data", "--config", config_file, "--out", tmp_path / "s3")
        run("synth-data", "--config", config_file, "--out", tmp_path / "s4", "--seed", 4)
        assert (tmp_path / "s3/data.csv").read_bytes() != (tmp_path / "s4/data.csv").read_bytes()

    def test_table_output(self, config_file, tmp_path, capsys):
        assert run("experiment", "--config", config_file, "--out", tmp_path / "t") == 0
        text = capsys.readouterr().out
        assert "== E1 ==" in text and "Recall" in text


class TestExitCodes:
    def test_config_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"dataset": {"synth": "botiot-mini"}, "variants": ["E2"]}))
        assert run("experiment", "--config", bad, "--out", tmp_path) == 2
        assert "error" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert run("train", "--config", tmp_path / "none.json", "--out", tmp_path) == 2

    def test_data_error(self, config_file, tmp_path):
        assert run("train-ae", "--config", config_file, "--out", tmp_path, "--train", tmp_path / "missing.csv") == 3

    def test_schema_error(self, config_file, tmp_path):
        (tmp_path / "x.csv").write_text("a,b\n1,2\n")
        assert run("preprocess", "--config", config_file, "--out", tmp_path / "o", "--input", tmp_path / "x.csv") == 3

    def test_numeric_error(self, config_file, tmp_path):
        out = tmp_path / "o"
        run("synth-data", "--config", config_file, "--out", out)
        run("preprocess", "--config", config_file, "--out", out)
        with (out / "train.csv").open() as fh:
            rows = list(csv.reader(fh))
        with (out / "huge.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(rows[0])
            for r in rows[1:]:
                w.writerow([repr(float(x) * 1e300) for x in r[:-1]] + [r[-1]])
        with pytest.warns(RuntimeWarning):
            assert run("train-ae", "--config", config_file, "--out", out, "--train", out / "huge.csv") == 4

    def test_cap_violation(self, tmp_path):
        raw = tiny_raw(augmentation={"plans": [{"class": "r", "count": 48}]})
        path = tmp_path / "c.json"
        path.write_text(json.dumps(raw))
        assert run("experiment", "--config", path, "--out", tmp_path / "o") == 2
