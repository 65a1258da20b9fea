import json
from pathlib import Path

import numpy as np
import pytest

from mriq import dataset, fileio
from mriq.calibration import VersionSet
from mriq.errors import MissingLabelError
from mriq.ruler import ImageRuler
from mriq.phantom import MagnitudeImage


def test_build_dataset_counts_and_files(tiny_dataset):
    out, manifest = tiny_dataset
    assert len(manifest["entries"]) == 8
    imgs = list((Path(out) / "images").glob("*.img"))
    assert len(imgs) == 8 * (5 + 1)
    for e in manifest["entries"]:
        assert len(e["versions"]) == 5
        assert len(e["heuristic"]["snr"]) == 5
        assert len(e["heuristic"]["block_dct"]) == 5
        assert len(e["snr_targets"]) == 4


def test_manifest_round_trip_is_byte_identical(tiny_dataset, tmp_path):
    out, _ = tiny_dataset
    original = (Path(out) / "manifest.json").read_bytes()
    manifest = dataset.load_manifest(Path(out) / "manifest.json")
    fileio.dump_canonical_json(manifest, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == original


def test_same_seed_rebuild_is_byte_identical(tmp_path):
    config = dataset.DatasetConfig(train_slices=2, val_slices=2, test_slices=2,
                                   slices_per_subject=2, m_t=3, size=32, n_coils=2, seed=9)
    dataset.build_dataset(tmp_path / "a", config)
    dataset.build_dataset(tmp_path / "b", config)
    for rel in sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*")
                      if p.is_file()):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), rel


def test_subject_splits_are_disjoint(tiny_dataset):
    _, manifest = tiny_dataset
    by_split = {}
    for e in manifest["entries"]:
        by_split.setdefault(e["split"], set()).add(e["subject_id"])
    splits = list(by_split.values())
    for i in range(len(splits)):
        for j in range(i + 1, len(splits)):
            assert not splits[i] & splits[j]


def test_assign_splits_property():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n_train = int(rng.integers(1, 20))
        n_val = int(rng.integers(1, 10))
        n_test = int(rng.integers(1, 10))
        n = n_train + n_val + n_test
        tags = dataset.assign_splits(n, n_train, n_val, n_test, int(rng.integers(0, 1000)))
        assert len(tags) == n
        assert tags.count("train") == n_train
        assert tags.count("val") == n_val
        assert tags.count("test") == n_test


def test_assign_splits_validation():
    with pytest.raises(ValueError):
        dataset.assign_splits(5, 2, 2, 2, 0)


def test_indivisible_counts_rejected(tmp_path):
    config = dataset.DatasetConfig(train_slices=3, val_slices=2, test_slices=2,
                                   slices_per_subject=2, size=32)
    with pytest.raises(ValueError):
        dataset.build_dataset(tmp_path, config)


def test_auto_picks_and_calibration(tiny_dataset):
    _, manifest = tiny_dataset
    manifest = json.loads(json.dumps(manifest))  # work on a copy
    picks = dataset.auto_picks(manifest, acceptability_db=18.75)
    subjects = {e["subject_id"] for e in manifest["entries"] if e["split"] in ("train", "val")}
    assert len(picks) == len(subjects)
    assert all(h == 3 for h in picks.values())  # 18.75 dB sits below the 21 dB rung
    dataset.apply_calibration(manifest, picks, eta=0.85)
    for e in manifest["entries"]:
        if e["split"] in ("train", "val"):
            assert e["human_label"] == 3
            assert len(e["calibrated"]["block_dct"]) == 5
            gaps_raw = np.diff(e["heuristic"]["block_dct"])
            gaps_cal = np.diff(e["calibrated"]["block_dct"])
            assert np.allclose(gaps_raw, gaps_cal, atol=1e-9)


def test_auto_picks_out_of_range_levels(tiny_dataset):
    _, manifest = tiny_dataset
    high = dataset.auto_picks(manifest, acceptability_db=55.0)
    assert all(h == 6 for h in high.values())  # nothing acceptable
    low = dataset.auto_picks(manifest, acceptability_db=2.0)
    assert all(h == 0 for h in low.values())  # even noisier would pass


def test_entry_sets_and_missing_labels(tiny_dataset):
    _, manifest = tiny_dataset
    sets = dataset.entry_sets(manifest, "block_dct", ("train",))
    assert all(isinstance(s, VersionSet) for s in sets)
    with pytest.raises(MissingLabelError):
        dataset.noise_training_data(manifest, tiny_dataset[0], "train", "block_dct")


def test_training_data_loading(tiny_dataset):
    out, manifest = tiny_dataset
    manifest = json.loads(json.dumps(manifest))
    picks = dataset.auto_picks(manifest, 18.75)
    dataset.apply_calibration(manifest, picks, eta=0.85)
    noise = dataset.noise_training_data(manifest, out, "train", "block_dct")
    assert len(noise) == 4
    assert noise[0].images.shape == (5, 32, 32)
    heur = dataset.noise_training_data(manifest, out, "train", "block_dct", labels="heuristic")
    assert not np.allclose(heur[0].targets, noise[0].targets)
    motion = dataset.motion_training_data(manifest, out, "train")
    assert len(motion) == 4 and motion[0].corrupted.shape == (32, 32)


def fake_ruler(scores, targets, threshold=(3, 3)):
    versions = [MagnitudeImage(pixels=np.zeros((16, 16)) + v) for v in range(len(scores))]
    return ImageRuler(scan_type="knee-fs", versions=versions, targets_db=list(targets),
                      snr_range=(8.0, 34.0), s_ruler=np.asarray(scores, float),
                      threshold=threshold)


def test_proxy_labels():
    ladder = np.linspace(8, 34, 8)
    ruler = fake_ruler(np.arange(8.0), ladder)
    assert dataset.proxy_ruler_score(None, ruler) == 7
    assert dataset.proxy_ruler_score(8.0, ruler) == 0
    assert dataset.proxy_ruler_score(20.0, ruler) == 3  # nearest rung 19.14
    assert dataset.proxy_pass(None, ruler) is True
    mid = ladder[3]
    assert dataset.proxy_pass(mid + 0.1, ruler) is True
    assert dataset.proxy_pass(mid - 0.1, ruler) is False


def test_single_best_threshold_separable():
    registry = {"knee-fs": fake_ruler(np.linspace(0, 10, 8), np.linspace(8, 34, 8))}
    raw = [1.0, 2.0, 8.0, 9.0]
    labels = [False, False, True, True]
    th = dataset.single_best_threshold(raw, labels, registry)
    grid = np.linspace(0, 10, 100)
    feasible = grid[(grid > 2.0) & (grid <= 8.0)]
    assert th == pytest.approx(feasible.min())  # tie -> lowest threshold
    assert np.mean((np.asarray(raw) >= th) == labels) == 1.0


def test_single_best_threshold_grid_bounds():
    registry = {"a-fs": fake_ruler([2.0, 4.0], [8.0, 34.0], threshold=(0, 1)),
                "b-nfs": fake_ruler([1.0, 9.0], [8.0, 34.0], threshold=(0, 1))}
    th = dataset.single_best_threshold([0.0, 10.0], [False, True], registry)
    assert 1.0 <= th <= 9.0


def test_single_best_threshold_validation():
    registry = {"a-fs": fake_ruler([1.0, 2.0], [8.0, 34.0], threshold=(0, 1))}
    with pytest.raises(ValueError):
        dataset.single_best_threshold([], [], registry)
