"""End-to-end command line behavior on a synthetic IDX dataset.

A tiny fake dataset is written in the real IDX layout so the full
train/verify/report loop runs in seconds without any downloaded files.
"""
import os
import struct

import numpy as np
import pytest

from qconvnet import cli
from qconvnet.config import TrainConfig
from qconvnet.report import read_metrics_file


def pack_images(images):
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    return struct.pack(">llll", 0x803, n, rows, cols) + images.tobytes()


def pack_labels(labels):
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">ll", 0x801, labels.shape[0]) + labels.tobytes()


def write_dataset(root, dataset="mnist", n_train=48, n_test=24, seed=0):
    rng = np.random.default_rng(seed)
    folder = root / dataset
    folder.mkdir(parents=True)
    for split, count in (("train", n_train), ("test", n_test)):
        prefix = "train" if split == "train" else "t10k"
        images = rng.integers(0, 256, (count, 28, 28))
        labels = rng.integers(0, 10, count)
        (folder / f"{prefix}-images-idx3-ubyte").write_bytes(pack_images(images))
        (folder / f"{prefix}-labels-idx1-ubyte").write_bytes(pack_labels(labels))
    return root


def write_config(tmp_path, data_root, **overrides):
    values = dict(dataset="mnist", image_size=8, kernel_size=2, mult_factor=2,
                  lrs="0.01,0.1", seeds="0", epochs=1, batch_size=8,
                  out_dir=str(tmp_path / "runs"), data_dir=str(data_root))
    values.update(overrides)
    lines = "# generated by the test suite\n"
    lines += "".join(f"{k} = {v}\n" for k, v in values.items() if v is not None)
    path = tmp_path / "run.cfg"
    path.write_text(lines)
    return str(path)


@pytest.fixture()
def tiny_data(tmp_path):
    return write_dataset(tmp_path / "data")


def test_train_writes_metrics_and_params(tmp_path, tiny_data, capsys):
    config = write_config(tmp_path, tiny_data)
    assert cli.main(["train", "--config", config]) == 0
    out = capsys.readouterr().out
    assert "selected lr=" in out
    runs = tmp_path / "runs"
    metrics = [p for p in os.listdir(runs) if p.startswith("metrics_mnist8_c2_m2")]
    assert len(metrics) == 1
    rows = read_metrics_file(str(runs / metrics[0]))
    # 2 lrs x 1 seed plus the selection summary row.
    assert len(rows) == 3
    assert sum(r.selected for r in rows) == 1
    assert (runs / "params_mnist8_c2_m2.qcnv").exists()


def test_verify_passes_on_trained_model(tmp_path, tiny_data, capsys, monkeypatch):
    config = write_config(tmp_path, tiny_data, lrs="0.1")
    assert cli.main(["train", "--config", config]) == 0
    capsys.readouterr()
    params_path = str(tmp_path / "runs" / "params_mnist8_c2_m2.qcnv")
    monkeypatch.setenv("QCNV_DATA_DIR", str(tiny_data))
    assert cli.main(["verify", "--params", params_path, "--samples", "5"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    verify_csv = params_path + ".verify.csv"
    with open(verify_csv) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "sample,max_abs_diff,label_matrix,label_sim"
    assert len(lines) == 6


def test_verify_unattainable_tolerance_fails(tmp_path, tiny_data, capsys, monkeypatch):
    config = write_config(tmp_path, tiny_data, lrs="0.1")
    assert cli.main(["train", "--config", config]) == 0
    capsys.readouterr()
    params_path = str(tmp_path / "runs" / "params_mnist8_c2_m2.qcnv")
    monkeypatch.setenv("QCNV_DATA_DIR", str(tiny_data))
    assert cli.main(["verify", "--params", params_path, "--samples", "3",
                     "--tol", "-1"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_report_renders_training_results(tmp_path, tiny_data, capsys):
    config = write_config(tmp_path, tiny_data)
    assert cli.main(["train", "--config", config]) == 0
    capsys.readouterr()
    runs = str(tmp_path / "runs")
    assert cli.main(["report", "--dir", runs]) == 0
    out = capsys.readouterr().out
    assert "mnist 8x8" in out
    assert "factor 2" in out
    assert os.path.exists(os.path.join(runs, "report.csv"))


def test_report_on_empty_directory(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert cli.main(["report", "--dir", str(empty)]) == 0
    assert "no results found" in capsys.readouterr().out


def test_missing_config_is_usage_error(tmp_path, capsys):
    assert cli.main(["train", "--config", str(tmp_path / "absent.cfg")]) == 2
    assert "error:" in capsys.readouterr().err


def test_malformed_config_is_usage_error(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("dataset = mnist\nwhat = 4\n")
    assert cli.main(["train", "--config", str(path)]) == 2
    assert "what" in capsys.readouterr().err


def test_verify_rejects_foreign_file(tmp_path, capsys):
    path = tmp_path / "junk.qcnv"
    path.write_bytes(b"JUNK!" + b"\x00" * 32)
    assert cli.main(["verify", "--params", str(path)]) == 2
    assert "magic" in capsys.readouterr().err


def test_missing_data_is_runtime_error(tmp_path, capsys):
    config = write_config(tmp_path, tmp_path / "nowhere")
    assert cli.main(["train", "--config", config]) == 1
    assert "error:" in capsys.readouterr().err


def test_env_var_supplies_data_dir(tmp_path, tiny_data, monkeypatch):
    monkeypatch.setenv("QCNV_DATA_DIR", str(tiny_data))
    config = write_config(tmp_path, None, data_dir=None)
    assert cli.main(["train", "--config", config]) == 0


def test_sweep_covers_every_kernel_factor_cell(tmp_path, tiny_data, monkeypatch):
    seen = []
    monkeypatch.setattr(cli, "train_with_config", lambda c: seen.append(c))
    config = write_config(tmp_path, tiny_data)
    assert cli.main(["sweep", "--config", config]) == 0
    assert [(c.kernel_size, c.mult_factor) for c in seen] == [
        (c, m) for c in (1, 2, 4, 8) for m in (1, 2, 4, 8)]
    assert all(isinstance(c, TrainConfig) for c in seen)
    assert all(c.dataset == "mnist" for c in seen)


def test_unknown_command_exits_with_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2
