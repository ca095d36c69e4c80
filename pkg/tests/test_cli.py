import numpy as np
import pytest

from siggraphgan import cli
from siggraphgan.fixture import fixture_csv_text


@pytest.fixture(scope="module")
def price_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "prices.csv"
    lines = fixture_csv_text().splitlines()
    path.write_text("\n".join(lines[:351]) + "\n")  # 350 closes
    return path


def write_config(path, price_csv, out_dir, **extra):
    pairs = {
        "loss_kind": "mse",
        "seq_len": 12,
        "gnn_neurons": 8,
        "geo_lstm_neurons": 8,
        "rec_lstm_neurons": 8,
        "gnn_layers": 1,
        "rec_lstm_layers": 1,
        "batch_size": 8,
        "epochs": 1,
        "seed": 5,
        "input": str(price_csv),
        "output_dir": str(out_dir),
        "n_samples": 25,
    }
    pairs.update(extra)
    path.write_text(
        "# test configuration\n"
        + "".join(f"{k} = {v}\n" for k, v in pairs.items())
    )
    return path


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory, price_csv):
    out = tmp_path_factory.mktemp("trained")
    cfg = out / "run.cfg"
    write_config(cfg, price_csv, out)
    assert cli.main(["train", "--config", str(cfg)]) == 0
    return out


class TestTrain:
    def test_writes_checkpoint_and_trace(self, trained_dir):
        assert (trained_dir / "checkpoint.bin").exists()
        trace = (trained_dir / "loss_trace.csv").read_text().splitlines()
        assert trace[0] == "epoch,loss"
        assert len(trace) == 2  # one epoch

    def test_missing_input_exits_3_with_path(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        write_config(cfg, tmp_path / "nope.csv", tmp_path)
        assert cli.main(["train", "--config", str(cfg)]) == 3
        assert "nope.csv" in capsys.readouterr().err

    def test_unknown_key_exits_2_naming_key(self, tmp_path, price_csv, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("learning_rte = 0.01\n")
        assert cli.main(["train", "--config", str(cfg)]) == 2
        assert "learning_rte" in capsys.readouterr().err

    def test_zero_epochs_writes_header_only_trace(self, tmp_path, price_csv):
        out = tmp_path / "out0"
        cfg = tmp_path / "zero.cfg"
        write_config(cfg, price_csv, out, epochs=0)
        assert cli.main(["train", "--config", str(cfg)]) == 0
        assert (out / "loss_trace.csv").read_text() == "epoch,loss\n"

    def test_seed_flag_changes_artifacts(self, tmp_path, price_csv):
        out = tmp_path / "seeded"
        cfg = tmp_path / "seeded.cfg"
        write_config(cfg, price_csv, out, epochs=0)
        assert cli.main(["train", "--config", str(cfg), "--seed", "9"]) == 0
        first = (out / "checkpoint.bin").read_bytes()
        assert cli.main(["train", "--config", str(cfg), "--seed", "10"]) == 0
        assert (out / "checkpoint.bin").read_bytes() != first


class TestGenerate:
    def test_row_count(self, trained_dir, price_csv, tmp_path):
        out = tmp_path / "fake.csv"
        code = cli.main(
            [
                "generate",
                "--checkpoint",
                str(trained_dir / "checkpoint.bin"),
                "--input",
                str(price_csv),
                "--samples",
                "9",
                "--out",
                str(out),
                "--seed",
                "2",
            ]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "sample_id,step,log_return"
        assert len(lines) == 1 + 9 * 12

    def test_zero_samples_header_only(self, trained_dir, price_csv, tmp_path):
        out = tmp_path / "empty.csv"
        code = cli.main(
            [
                "generate",
                "--checkpoint",
                str(trained_dir / "checkpoint.bin"),
                "--input",
                str(price_csv),
                "--samples",
                "0",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert out.read_text() == "sample_id,step,log_return\n"

    def test_same_seed_byte_identical(self, trained_dir, price_csv, tmp_path):
        args = [
            "generate",
            "--checkpoint",
            str(trained_dir / "checkpoint.bin"),
            "--input",
            str(price_csv),
            "--samples",
            "5",
            "--seed",
            "4",
        ]
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert cli.main(args + ["--out", str(out1)]) == 0
        assert cli.main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_version_mismatch_exits_5(self, tmp_path, price_csv):
        bad = tmp_path / "bad.bin"
        bad.write_bytes(b"siggraphgan-checkpoint v42\njunk\n")
        code = cli.main(
            [
                "generate",
                "--checkpoint",
                str(bad),
                "--input",
                str(price_csv),
                "--samples",
                "1",
                "--out",
                str(tmp_path / "x.csv"),
            ]
        )
        assert code == 5


class TestEvaluate:
    def test_identical_inputs_zero_metrics(self, trained_dir, price_csv, tmp_path):
        out_dir = tmp_path / "eval0"
        code = cli.main(
            [
                "evaluate",
                "--real",
                str(price_csv),
                "--fake",
                str(price_csv),
                "--out-dir",
                str(out_dir),
            ]
        )
        assert code == 0
        report = (out_dir / "report.csv").read_text().splitlines()
        assert report[0] == "metric,raw,display_x100"
        labels = [line.split(",")[0] for line in report[1:]]
        assert labels == [
            "EMD(1)",
            "EMD(5)",
            "EMD(20)",
            "EMD(100)",
            "Sig-RMSE(1)",
            "Sig-RMSE(5)",
            "Sig-RMSE(20)",
            "Sig-RMSE(100)",
            "Leverage Effect",
        ]
        for line in report[1:]:
            _, raw, display = line.split(",")
            assert float(raw) == 0.0
            assert float(display) == 0.0

    def test_histogram_counts_sum_to_samples(self, trained_dir, price_csv, tmp_path):
        fake = tmp_path / "fake.csv"
        assert (
            cli.main(
                [
                    "generate",
                    "--checkpoint",
                    str(trained_dir / "checkpoint.bin"),
                    "--input",
                    str(price_csv),
                    "--samples",
                    "20",
                    "--out",
                    str(fake),
                ]
            )
            == 0
        )
        out_dir = tmp_path / "eval1"
        assert (
            cli.main(
                [
                    "evaluate",
                    "--real",
                    str(price_csv),
                    "--fake",
                    str(fake),
                    "--out-dir",
                    str(out_dir),
                ]
            )
            == 0
        )
        n_real = 350 - 1
        n_fake = 20 * 12
        for k in (1, 5, 10):
            hist = (out_dir / f"hist_k{k}.csv").read_text().splitlines()
            assert hist[0] == "bin_left,bin_right,count_real,count_fake"
            real_total = sum(int(line.split(",")[2]) for line in hist[1:])
            fake_total = sum(int(line.split(",")[3]) for line in hist[1:])
            assert real_total == n_real - k + 1
            assert fake_total == n_fake - k + 1

    def test_malformed_fake_exits_3_with_line(self, price_csv, tmp_path, capsys):
        fake = tmp_path / "broken.csv"
        fake.write_text("sample_id,step,log_return\n0,0,0.1\n0,1,zzz\n")
        code = cli.main(
            [
                "evaluate",
                "--real",
                str(price_csv),
                "--fake",
                str(fake),
                "--out-dir",
                str(tmp_path / "ev"),
            ]
        )
        assert code == 3
        assert ":3" in capsys.readouterr().err


class TestAblate:
    def test_unknown_component_exits_2(self, tmp_path, price_csv, capsys):
        cfg = tmp_path / "abl.cfg"
        write_config(cfg, price_csv, tmp_path / "abl_out")
        code = cli.main(
            ["ablate", "--config", str(cfg), "--components", "attention"]
        )
        assert code == 2
        assert "attention" in capsys.readouterr().err

    def test_table_rows(self, tmp_path, price_csv):
        out = tmp_path / "abl_out"
        cfg = tmp_path / "abl.cfg"
        write_config(cfg, price_csv, out, n_samples=15, epochs=1)
        code = cli.main(
            ["ablate", "--config", str(cfg), "--components", "geometric,skip"]
        )
        assert code == 0
        lines = (out / "ablation.csv").read_text().splitlines()
        assert len(lines) == 4  # header + baseline + two variants
        assert lines[1].startswith("baseline,")
        assert lines[2].startswith("w/o geometric,")
        assert lines[3].startswith("w/o skip,")

    def test_empty_component_list_runs_baseline_only(self, tmp_path, price_csv):
        out = tmp_path / "abl_base"
        cfg = tmp_path / "abl2.cfg"
        write_config(cfg, price_csv, out, n_samples=15, epochs=0)
        assert cli.main(["ablate", "--config", str(cfg)]) == 0
        lines = (out / "ablation.csv").read_text().splitlines()
        assert len(lines) == 2


class TestBaseline:
    def test_garch_samples(self, tmp_path, price_csv):
        out = tmp_path / "garch_out"
        cfg = tmp_path / "garch.cfg"
        write_config(cfg, price_csv, out, baseline="garch", n_samples=6)
        assert cli.main(["baseline", "--config", str(cfg)]) == 0
        lines = (out / "garch_samples.csv").read_text().splitlines()
        assert len(lines) == 1 + 6 * 12

    def test_gbm_samples(self, tmp_path, price_csv):
        out = tmp_path / "gbm_out"
        cfg = tmp_path / "gbm.cfg"
        write_config(cfg, price_csv, out, baseline="gbm", n_samples=6)
        assert cli.main(["baseline", "--config", str(cfg)]) == 0
        lines = (out / "gbm_samples.csv").read_text().splitlines()
        assert len(lines) == 1 + 6 * 12

    def test_gan_baseline_rejected(self, tmp_path, price_csv, capsys):
        cfg = tmp_path / "gan.cfg"
        write_config(cfg, price_csv, tmp_path, baseline="siggan-mse")
        assert cli.main(["baseline", "--config", str(cfg)]) == 2


class TestDeterminism:
    def test_repeat_training_byte_identical(self, tmp_path, price_csv):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        for out in (out1, out2):
            cfg = tmp_path / f"{out.name}.cfg"
            write_config(cfg, price_csv, out, epochs=1)
            assert cli.main(["train", "--config", str(cfg)]) == 0
        assert (out1 / "checkpoint.bin").read_bytes() == (
            out2 / "checkpoint.bin"
        ).read_bytes()
        assert (out1 / "loss_trace.csv").read_bytes() == (
            out2 / "loss_trace.csv"
        ).read_bytes()

    def test_threads_flag_validation(self, capsys):
        assert cli.main(["train", "--config", "x", "--threads", "0"]) == 2
