import csv
import math

import numpy as np
import pytest

from cfm import load_csv, write_csv
from cfm.cli import main
from cfm.model import load_model, model_from_json, model_to_json
from tests.conftest import make_blobs

FAST_CONFIG = """
gamma = 2
population = 10
evaluations = 150
quantiles = 200
seed = 5
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Small labeled dataset on disk plus schema and a fast config."""
    root = tmp_path_factory.mktemp("cli")
    ds = make_blobs(120, 2, 2, seed=50)
    write_csv(ds, root / "train.csv")
    write_csv(make_blobs(60, 2, 2, seed=51), root / "test.csv")
    ds.schema.save(root / "schema.txt")
    (root / "fast.cfg").write_text(FAST_CONFIG)
    return root


def run_cli(*argv):
    return main([str(a) for a in argv])


def fit(workspace, out, *extra):
    code = run_cli("fit", workspace / "train.csv", "--schema", workspace / "schema.txt",
                   "--config", workspace / "fast.cfg", "--out", out, *extra)
    assert code == 0
    return out


class TestFit:
    def test_fit_writes_model_and_rules(self, workspace, tmp_path):
        out = fit(workspace, tmp_path / "model.json")
        assert out.exists()
        rules_file = out.with_suffix(".rules")
        assert rules_file.exists()
        text = rules_file.read_text()
        assert "IF " in text and "THEN" in text
        assert "Fuzzy set vertices" in text

    def test_same_seed_byte_identical_models(self, workspace, tmp_path):
        a = fit(workspace, tmp_path / "a.json")
        b = fit(workspace, tmp_path / "b.json")
        assert a.read_bytes() == b.read_bytes()

    def test_lightweight_superset_of_selected(self, workspace, tmp_path):
        full = fit(workspace, tmp_path / "full.json")
        light = fit(workspace, tmp_path / "light.json", "--lightweight")
        n_full = len(load_model(full).rule_base.rules)
        n_light = len(load_model(light).rule_base.rules)
        assert n_full <= n_light

    def test_gamma_monotone_via_cli(self, workspace, tmp_path):
        counts = []
        for gamma in (2, 8):
            out = fit(workspace, tmp_path / f"g{gamma}.json", "--lightweight",
                      "--gamma", str(gamma))
            counts.append(len(load_model(out).rule_base.rules))
        assert counts[0] <= counts[1]

    def test_debug_itemsets_dump(self, workspace, tmp_path):
        dump = tmp_path / "itemsets.txt"
        fit(workspace, tmp_path / "dbg.json", "--lightweight", "--debug-itemsets", dump)
        assert dump.exists() and "count=" in dump.read_text()

    def test_plots_rendered(self, workspace, tmp_path):
        plots = tmp_path / "figs"
        fit(workspace, tmp_path / "p.json", "--lightweight", "--plots", plots)
        assert (plots / "fuzzy_partitions.png").exists()

    def test_model_round_trip_byte_identical(self, workspace, tmp_path):
        out = fit(workspace, tmp_path / "rt.json")
        text = out.read_text()
        assert model_to_json(model_from_json(text)) == text


@pytest.fixture(scope="module")
def model_path(workspace, tmp_path_factory):
    out = tmp_path_factory.mktemp("predict") / "model.json"
    return fit(workspace, out)


class TestPredict:
    def test_predictions_format(self, workspace, model_path, tmp_path, capsys):
        pred_file = tmp_path / "pred.csv"
        code = run_cli("predict", workspace / "test.csv", "--model", model_path,
                       "--out", pred_file)
        assert code == 0
        rows = [line.split(",") for line in pred_file.read_text().splitlines()]
        assert len(rows) == 60
        for i, row in enumerate(rows):
            assert int(row[0]) == i
            assert row[1] in ("c0", "c1", "NO_COVER")
            float(row[2])

    def test_training_accuracy_matches_evaluate(self, workspace, model_path, tmp_path,
                                                capsys):
        code = run_cli("predict", workspace / "train.csv", "--model", model_path)
        assert code == 0
        pred_lines = capsys.readouterr().out.strip().splitlines()
        model = load_model(model_path)
        schema = model.schema
        train = load_csv(workspace / "train.csv", schema)
        correct = sum(
            1 for i, line in enumerate(pred_lines)
            if line.split(",")[1] == schema.class_labels[int(train.labels[i])]
        )
        acc_pred = correct / train.n

        out_dir = tmp_path / "train_eval"
        code = run_cli("evaluate", workspace / "train.csv", "--model", model_path,
                       "--out", out_dir)
        assert code == 0
        with open(out_dir / "metrics.csv") as fh:
            rows = list(csv.reader(fh))
        acc_eval = float(rows[1][0])
        assert acc_pred == acc_eval

    def test_out_of_range_values_still_classified(self, workspace, model_path, tmp_path,
                                                  capsys):
        path = tmp_path / "far.csv"
        path.write_text("1000.0,-1000.0\n")
        code = run_cli("predict", path, "--model", model_path)
        assert code == 0
        out = capsys.readouterr().out.strip()
        assert out.startswith("0,")

    def test_empty_input_empty_output(self, workspace, model_path, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        out = tmp_path / "pred.csv"
        code = run_cli("predict", empty, "--model", model_path, "--out", out)
        assert code == 0
        assert out.read_text() == ""

    def test_label_column_optional(self, workspace, model_path, tmp_path, capsys):
        path = tmp_path / "unlabeled.csv"
        path.write_text("0.1,0.2\n-1.5,2.0\n")
        assert run_cli("predict", path, "--model", model_path) == 0
        assert len(capsys.readouterr().out.strip().splitlines()) == 2


class TestEvaluate:
    def test_report_files(self, workspace, tmp_path, capsys):
        model_path = fit(workspace, tmp_path / "model.json")
        out_dir = tmp_path / "report"
        code = run_cli("evaluate", workspace / "test.csv", "--model", model_path,
                       "--out", out_dir)
        assert code == 0
        assert (out_dir / "metrics.txt").exists()
        assert (out_dir / "confusion.png").exists()
        with open(out_dir / "metrics.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:3] == ["acc", "acc_class", "gm"]
        acc = float(rows[1][0])
        assert 0.0 <= acc <= 1.0


class TestCv:
    def test_report_shape_and_mean(self, workspace, tmp_path, capsys):
        out_dir = tmp_path / "cv"
        code = run_cli("cv", workspace / "train.csv", "--schema", workspace / "schema.txt",
                       "--config", workspace / "fast.cfg", "--k", "3", "--lightweight",
                       "--out", out_dir)
        assert code == 0
        with open(out_dir / "cv.csv") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        assert header[0] == "fold"
        assert len(body) == 4  # 3 folds + mean
        assert body[-1][0] == "mean"
        acc_column = [float(r[1]) for r in body[:-1]]
        assert float(body[-1][1]) == pytest.approx(math.fsum(acc_column) / 3, abs=1e-12)
        assert (out_dir / "cv_metrics.png").exists()

    def test_fixed_seed_reproducible(self, workspace, tmp_path):
        outs = []
        for name in ("cv1", "cv2"):
            out_dir = tmp_path / name
            code = run_cli("cv", workspace / "train.csv", "--schema",
                           workspace / "schema.txt", "--config", workspace / "fast.cfg",
                           "--k", "3", "--lightweight", "--out", out_dir)
            assert code == 0
            outs.append((out_dir / "cv.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_small_class_rejected_with_data_error(self, workspace, tmp_path):
        lines = ["0.1,0.2,c0"] * 10 + ["5.0,5.0,c1"]
        data = tmp_path / "tiny.csv"
        data.write_text("\n".join(lines) + "\n")
        code = run_cli("cv", data, "--schema", workspace / "schema.txt", "--k", "3")
        assert code == 2


class TestExitCodes:
    def test_usage_error(self, workspace):
        assert run_cli("fit", workspace / "train.csv") == 1

    def test_bad_gamma_value(self, workspace, tmp_path):
        assert run_cli("fit", workspace / "train.csv", "--schema",
                       workspace / "schema.txt", "--gamma", "3",
                       "--out", tmp_path / "x.json") == 1

    def test_unknown_config_key(self, workspace, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("no_such_key=1\n")
        assert run_cli("fit", workspace / "train.csv", "--schema",
                       workspace / "schema.txt", "--config", bad,
                       "--out", tmp_path / "x.json") == 1

    def test_data_error(self, workspace, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("oops,1.0,c0\n")
        assert run_cli("fit", bad, "--schema", workspace / "schema.txt",
                       "--out", tmp_path / "x.json") == 2

    def test_missing_file(self, workspace, tmp_path):
        assert run_cli("fit", tmp_path / "nope.csv", "--schema",
                       workspace / "schema.txt", "--out", tmp_path / "x.json") == 2

    def test_training_failure(self, workspace, tmp_path):
        conflicting = tmp_path / "conflict.csv"
        rows = [f"0.5,0.5,c{i % 2}" for i in range(20)]
        conflicting.write_text("\n".join(rows) + "\n")
        code = run_cli("fit", conflicting, "--schema", workspace / "schema.txt",
                       "--out", tmp_path / "x.json")
        assert code == 3


class TestBench:
    def test_smoke_grid(self, tmp_path, capsys):
        ds = make_blobs(200, 2, 2, seed=60)
        write_csv(ds, tmp_path / "bench.csv")
        ds.schema.save(tmp_path / "schema.txt")
        (tmp_path / "fast.cfg").write_text("lightweight=true\nquantiles=100\nseed=1\n")
        out_dir = tmp_path / "bench_out"
        code = run_cli("bench", tmp_path / "bench.csv", "--schema",
                       tmp_path / "schema.txt", "--config", tmp_path / "fast.cfg",
                       "--cores", "1,2", "--fractions", "0.5,1.0", "--out", out_dir)
        assert code == 0
        with open(out_dir / "timings.csv") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1 + 2 * 4  # header + 2 stages x 4 cells
        with open(out_dir / "scalability.csv") as fh:
            meas = list(csv.reader(fh))[1:]
        at_m1 = [float(r[3]) for r in meas if float(r[2]) == 1.0]
        assert at_m1 and all(v == 1.0 for v in at_m1)
        assert (out_dir / "bench_rule_induction.png").exists()
        assert (out_dir / "bench_whole_pipeline.png").exists()

    def test_bad_fraction_rejected(self, tmp_path):
        ds = make_blobs(50, 2, 2, seed=61)
        write_csv(ds, tmp_path / "b.csv")
        ds.schema.save(tmp_path / "schema.txt")
        assert run_cli("bench", tmp_path / "b.csv", "--schema", tmp_path / "schema.txt",
                       "--fractions", "0,1.0") == 1
