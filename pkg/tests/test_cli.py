import json

import pytest

from absalab.checkpoint import load_archive
from absalab.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def base_args(fixtures_dir, tmp_path, **extra):
    args = {
        "--data-dir": str(fixtures_dir),
        "--checkpoint-dir": str(tmp_path / "ckpt"),
        "--embedding-dim": "8",
        "--alsa-hidden": "4",
        "--ae-hidden": "3",
        "--epochs": "1",
        "--seed": "3",
        "--dev-fraction": "0",
        "--lr": "0.01",
    }
    args.update(extra)
    out = []
    for key, value in args.items():
        out.extend([key, value])
    return out


def test_majority_command_reports_fixture_value(capsys, fixtures_dir, tmp_path):
    code, out, err = run_cli(capsys, "majority", *base_args(fixtures_dir, tmp_path))
    assert code == 0, err
    last = json.loads(out.strip().splitlines()[-1])
    assert last["macro_f1"] == 22.22
    assert "macro F1: 22.22" in out


def test_ingest_command_counts(capsys, fixtures_dir, tmp_path):
    code, out, err = run_cli(capsys, "ingest", "--xml", str(fixtures_dir / "laptop_train.xml"))
    assert code == 0, err
    summary = json.loads(out.strip().splitlines()[-1])
    assert summary == {"sentences": 6, "samples": 5, "positive": 1, "negative": 3,
                       "neutral": 1, "sa": 3, "ma": 2}


def test_train_alsa_then_eval(capsys, fixtures_dir, tmp_path):
    code, out, err = run_cli(capsys, "train-alsa", *base_args(fixtures_dir, tmp_path, **{"--dev-fraction": "0.2"}))
    assert code == 0, err
    assert "checkpoint:" in out
    ckpt = out.strip().splitlines()[-1].split(": ", 1)[1]
    code, out, err = run_cli(capsys, "eval", "--checkpoint", ckpt,
                             *base_args(fixtures_dir, tmp_path))
    assert code == 0, err
    record = json.loads(out.strip().splitlines()[-1])
    assert record["count"] == 4


def test_full_transfer_pipeline_via_cli(capsys, fixtures_dir, tmp_path):
    # 1) train the extractor
    code, out, err = run_cli(capsys, "train-ae", *base_args(fixtures_dir, tmp_path))
    assert code == 0, err
    ae_ckpt = str(tmp_path / "ckpt" / "ae_laptop.best.ckpt")

    # 2) export transfer rows for train split
    st_path = str(tmp_path / "laptop_train.st")
    code, out, err = run_cli(capsys, "export-st", "--checkpoint", ae_ckpt,
                             "--split", "train", "--out", st_path,
                             *base_args(fixtures_dir, tmp_path))
    assert code == 0, err
    cache = load_archive(st_path)
    assert all(m.shape[1] == 6 for m in cache.values())

    # 3) train the widened classifier against the cache
    code, out, err = run_cli(capsys, "train-alsa", "--input-mode", "transfer",
                             "--transfer-dim", "6", "--st-cache-path", st_path,
                             *base_args(fixtures_dir, tmp_path))
    assert code == 0, err
    assert "checkpoint:" in out


def test_dump_attention_command(capsys, fixtures_dir, tmp_path):
    code, out, err = run_cli(capsys, "train-alsa", *base_args(fixtures_dir, tmp_path))
    assert code == 0, err
    ckpt = out.strip().splitlines()[-1].split(": ", 1)[1]
    dump_path = tmp_path / "attn.jsonl"
    code, out, err = run_cli(capsys, "dump-attention", "--checkpoint", ckpt,
                             "--split", "test", "--out", str(dump_path),
                             *base_args(fixtures_dir, tmp_path))
    assert code == 0, err
    records = [json.loads(line) for line in dump_path.read_text().strip().splitlines()]
    assert len(records) == 4  # one atae head per test sample
    for record in records:
        assert abs(sum(record["alpha"]) - 1.0) < 1e-6
        assert len(record["alpha"]) == len(record["tokens"])


def test_train_alsa_noise_variant(capsys, fixtures_dir, tmp_path):
    code, out, err = run_cli(capsys, "train-alsa", "--input-mode", "noise",
                             "--transfer-dim", "6", *base_args(fixtures_dir, tmp_path))
    assert code == 0, err
    ckpt = out.strip().splitlines()[-1].split(": ", 1)[1]
    assert "atae-r_laptop" in ckpt
    code, out, err = run_cli(capsys, "eval", "--checkpoint", ckpt,
                             *base_args(fixtures_dir, tmp_path))
    assert code == 0, err


def test_train_multitask_via_task_flag(capsys, fixtures_dir, tmp_path):
    code, out, err = run_cli(capsys, "train-alsa", "--task", "multitask",
                             *base_args(fixtures_dir, tmp_path))
    assert code == 0, err
    ckpt = out.strip().splitlines()[-1].split(": ", 1)[1]
    assert "multitask_laptop" in ckpt
    code, out, err = run_cli(capsys, "eval", "--checkpoint", ckpt,
                             *base_args(fixtures_dir, tmp_path))
    assert code == 0, err
    record = json.loads(out.strip().splitlines()[-1])
    assert record["count"] == 4


def test_grid_search_command(capsys, fixtures_dir, tmp_path):
    code, out, err = run_cli(capsys, "grid-search", "--grid", "lr=0.01,0.02",
                             *base_args(fixtures_dir, tmp_path, **{"--dev-fraction": "0.2"}))
    assert code == 0, err
    rows = [json.loads(line) for line in out.strip().splitlines()]
    assert len(rows) == 2
    assert rows[0]["rank"] == 1


def test_cross_domain_command(capsys, fixtures_dir, tmp_path):
    for domain in ("laptop", "restaurant"):
        code, _, err = run_cli(capsys, "train-ae", "--domain", domain,
                               *base_args(fixtures_dir, tmp_path))
        assert code == 0, err
    code, out, err = run_cli(capsys, "cross-domain", "--ae-domain", "laptop",
                             "--alsa-domain", "restaurant",
                             *base_args(fixtures_dir, tmp_path))
    assert code == 0, err
    record = json.loads(out.strip().splitlines()[-1])
    assert record["ae_domain"] == "laptop"
    assert record["alsa_domain"] == "restaurant"


def test_failures_emit_machine_parseable_error_line(capsys, fixtures_dir, tmp_path):
    code, out, err = run_cli(capsys, "majority", "--data-dir", str(tmp_path / "nowhere"))
    assert code == 1
    error_line = json.loads(err.strip().splitlines()[-1])
    assert "error" in error_line

    code, out, err = run_cli(capsys, "train-alsa", "--lr", "-5",
                             *base_args(fixtures_dir, tmp_path)[2:])
    assert code == 1
    assert "error" in json.loads(err.strip().splitlines()[-1])


def test_config_file_with_flag_override(capsys, fixtures_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        f"data_dir = {fixtures_dir}\ncheckpoint_dir = {tmp_path / 'ckpt'}\n"
        "embedding_dim = 8\nalsa_hidden = 4\nae_hidden = 3\nepochs = 5\nseed = 3\n"
        "dev_fraction = 0\nlr = 0.01\n",
        encoding="utf-8",
    )
    code, out, err = run_cli(capsys, "train-alsa", "--config", str(cfg), "--epochs", "1")
    assert code == 0, err
    log_lines = [line for line in out.strip().splitlines() if line.startswith("{")]
    assert len(log_lines) == 1  # override took effect
