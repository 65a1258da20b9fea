import hashlib
import json
from pathlib import Path

import pytest

from mriq.cli import main


def tree_hashes(root):
    out = {}
    for p in sorted(Path(root).rglob("*")):
        if p.is_file():
            out[str(p.relative_to(root))] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out


SIM_ARGS = ["--seed", "7", "--size", "32", "--mt", "5", "--coils", "2",
            "--train", "4", "--val", "2", "--test", "2"]


def test_simulate_is_deterministic(tmp_path):
    assert main(["simulate", "--out", str(tmp_path / "a")] + SIM_ARGS) == 0
    assert main(["simulate", "--out", str(tmp_path / "b")] + SIM_ARGS) == 0
    assert tree_hashes(tmp_path / "a") == tree_hashes(tmp_path / "b")


def test_full_pipeline_smoke(tmp_path, capsys):
    d = tmp_path / "data"
    assert main(["simulate", "--out", str(d)] + SIM_ARGS) == 0
    assert main(["calibrate", "--manifest", str(d / "manifest.json"),
                 "--store", str(d / "labels.json"), "--auto-pick-db", "18.75"]) == 0
    assert main(["train", "--manifest", str(d / "manifest.json"),
                 "--out", str(d / "ckpt.npz"), "--mode", "dual", "--epochs", "2",
                 "--lr", "1e-3", "--seed", "3"]) == 0
    assert main(["make-ruler", "--manifest", str(d / "manifest.json"),
                 "--checkpoint", str(d / "ckpt.npz"), "--out", str(d / "rulers"),
                 "--pick-threshold-db", "18.75"]) == 0
    assert main(["evaluate", "--manifest", str(d / "manifest.json"),
                 "--checkpoint", str(d / "ckpt.npz"), "--rulers", str(d / "rulers"),
                 "--store", str(d / "labels.json"), "--motion",
                 "--out", str(d / "report.json")]) == 0
    report = json.loads((d / "report.json").read_text())
    for key in ("accuracy", "score_mae", "confusion_binary", "confusion_ruler",
                "krippendorff_alpha", "spearman"):
        assert key in report
    out = capsys.readouterr().out
    assert "binary accuracy" in out

    # scoring a ruler image against its own registry reproduces its index
    assert main(["score", "--checkpoint", str(d / "ckpt.npz"),
                 "--rulers", str(d / "rulers"), "--store", str(d / "labels.json"),
                 str(d / "rulers" / "knee-fs" / "v6.img")]) == 0
    out = capsys.readouterr().out
    assert "rs=6" in out


def test_missing_artifacts_fail_with_diagnostic(tmp_path, capsys):
    code = main(["train", "--manifest", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "x.npz")])
    assert code == 2
    assert "manifest" in capsys.readouterr().err
    code = main(["evaluate", "--manifest", str(tmp_path / "nope.json"),
                 "--checkpoint", str(tmp_path / "c.npz"), "--rulers", str(tmp_path / "r")])
    assert code == 2


def test_calibrate_requires_picks(tmp_path, capsys):
    d = tmp_path / "data"
    assert main(["simulate", "--out", str(d)] + SIM_ARGS) == 0
    code = main(["calibrate", "--manifest", str(d / "manifest.json"),
                 "--store", str(d / "labels.json")])
    assert code == 2
    assert "picks" in capsys.readouterr().err
