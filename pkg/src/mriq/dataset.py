"""Synthetic dataset assembly, manifests, splits, and threshold baselines.

A dataset is a directory with one canonical-JSON manifest plus IMG files
(and optionally KSET files) for every slice: m_t graded noise versions, one
motion-injected version, heuristic scores for each method, and slots for
human labels and calibrated scores.  Subjects own consecutive slices and
splits partition subjects, never slices, so no subject leaks across
train/val/test.
"""

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import fileio
from .calibration import VersionSet, calibrate, propagate_labels
from .errors import MissingLabelError
from .estimators import Method, score_version_set
from .kspace import forward_kspace, version_set_from_kspace, version_snr_targets
from .motion import inject_motion, sample_trajectory
from .phantom import generate_phantom, synth_coil_maps
from .ruler import ImageRuler

DEFAULT_SCAN_TYPES = ("knee-fs", "knee-nfs", "brain-fs", "brain-nfs")


@dataclass
class DatasetConfig:
    scan_types: tuple = DEFAULT_SCAN_TYPES
    train_slices: int = 200
    val_slices: int = 40
    test_slices: int = 60
    slices_per_subject: int = 2
    m_t: int = 5
    size: int = 128
    n_coils: int = 4
    etl: int = 8
    snr_low_db: float = 12.0
    snr_high_db: float = 30.0
    seed: int = 0
    save_kspace: bool = False


def assign_splits(n_subjects: int, n_train: int, n_val: int, n_test: int, seed: int) -> list:
    """Shuffle subjects into split tags; counts are in subjects."""
    if n_train + n_val + n_test != n_subjects:
        raise ValueError("split counts must sum to the subject count")
    tags = ["train"] * n_train + ["val"] * n_val + ["test"] * n_test
    rng = np.random.default_rng([seed, 0x51])
    perm = rng.permutation(n_subjects)
    out = [""] * n_subjects
    for slot, subj in enumerate(perm):
        out[subj] = tags[slot]
    return out


def _subject_counts(config: DatasetConfig) -> tuple:
    spc = config.slices_per_subject
    for name, n in (("train", config.train_slices), ("val", config.val_slices),
                    ("test", config.test_slices)):
        if n % spc != 0:
            raise ValueError(f"{name} slice count {n} not divisible by slices_per_subject {spc}")
    return config.train_slices // spc, config.val_slices // spc, config.test_slices // spc


def build_dataset(out_dir, config: DatasetConfig) -> dict:
    """Simulate every slice, write images and the manifest; returns the manifest."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    if config.save_kspace:
        (out / "kspace").mkdir(exist_ok=True)
    n_train, n_val, n_test = _subject_counts(config)
    n_subjects = n_train + n_val + n_test
    splits = assign_splits(n_subjects, n_train, n_val, n_test, config.seed)
    seeds = np.random.SeedSequence(config.seed).generate_state(n_subjects * (config.slices_per_subject + 2))
    seeds = iter(int(s) for s in seeds)

    entries = []
    for subj in range(n_subjects):
        scan_type = config.scan_types[subj % len(config.scan_types)]
        subject_id = f"{scan_type}-s{subj:04d}"
        maps_seed = next(seeds)
        motion_seed_base = next(seeds)
        maps = synth_coil_maps(config.size, config.n_coils, maps_seed)
        for z in range(config.slices_per_subject):
            slice_seed = next(seeds)
            slice_id = f"{subject_id}-z{z}"
            phantom = generate_phantom(slice_seed, config.size, scan_type)
            k = forward_kspace(phantom, maps, etl=config.etl)
            k.slice_id = slice_id
            versions = version_set_from_kspace(k, config.m_t, config.snr_low_db,
                                               config.snr_high_db, slice_seed, slice_id=slice_id)
            traj = sample_trajectory(motion_seed_base + z, k.n_shots)
            motion_img = inject_motion(k, maps, traj)
            motion_img.slice_id = slice_id

            version_paths = []
            for img in versions:
                rel = f"images/{slice_id}_v{img.version}.img"
                target = (None if img.version == config.m_t
                          else float(version_snr_targets(config.m_t, config.snr_low_db,
                                                         config.snr_high_db)[img.version - 1]))
                fileio.write_img(out / rel, img, provenance={
                    "kind": "noise_version", "seed": slice_seed, "snr_target_db": target})
                version_paths.append(rel)
            motion_rel = f"images/{slice_id}_motion.img"
            fileio.write_img(out / motion_rel, motion_img, provenance={
                "kind": "motion", "seed": motion_seed_base + z,
                "positions": traj.n_positions, "cut_points": traj.cut_points})

            kset_rel = None
            if config.save_kspace:
                kset_rel = f"kspace/{slice_id}.kset"
                fileio.write_kset(out / kset_rel, k)

            heuristic = {method.value: [s.value for s in score_version_set(versions, method)]
                         for method in (Method.SNR, Method.BLOCK_DCT)}
            entries.append({
                "slice_id": slice_id,
                "subject_id": subject_id,
                "slice_index": z,
                "scan_type": scan_type,
                "split": splits[subj],
                "versions": version_paths,
                "motion": motion_rel,
                "kspace": kset_rel,
                "snr_targets": [float(t) for t in version_snr_targets(
                    config.m_t, config.snr_low_db, config.snr_high_db)],
                "heuristic": heuristic,
                "calibrated": {},
                "human_label": None,
            })

    manifest = {"format": "MRIQ-DATASET1", "config": asdict(config), "calibration": {},
                "entries": entries}
    # Tuples serialize as lists; normalize so a rebuild is byte-identical.
    manifest["config"]["scan_types"] = list(config.scan_types)
    fileio.dump_canonical_json(manifest, out / "manifest.json")
    return manifest


def load_manifest(path) -> dict:
    manifest = fileio.load_json(path)
    if manifest.get("format") != "MRIQ-DATASET1":
        raise ValueError(f"{path} is not a dataset manifest")
    return manifest


def entry_sets(manifest: dict, method: str, splits: tuple, picks: dict | None = None) -> list:
    """VersionSet views over manifest entries (scores only, no image loading)."""
    picks = picks or {}
    sets = []
    for e in manifest["entries"]:
        if e["split"] not in splits:
            continue
        h = picks.get(e["slice_id"], e["human_label"])
        sets.append(VersionSet(slice_id=e["slice_id"], scan_type=e["scan_type"],
                               subject_id=e["subject_id"], slice_index=e["slice_index"],
                               heuristic=e["heuristic"][method], human_label=h))
    return sets


def apply_calibration(manifest: dict, picks: dict, eta: float,
                      methods: tuple = ("snr", "block_dct"),
                      splits: tuple = ("train", "val")) -> dict:
    """Propagate picks, calibrate each method's scores, update the manifest."""
    calib_meta = {"eta": eta, "mu_h": {}}
    for method in methods:
        sets = entry_sets(manifest, method, splits, picks)
        labeled = propagate_labels(sets)
        result = calibrate(labeled, eta)
        by_id = {s.slice_id: (s.human_label, scores)
                 for s, scores in zip(labeled, result.scores)}
        for e in manifest["entries"]:
            if e["slice_id"] in by_id:
                h, scores = by_id[e["slice_id"]]
                e["human_label"] = h
                e["calibrated"][method] = [float(v) for v in scores]
        calib_meta["mu_h"][method] = result.mu_h
    manifest["calibration"] = calib_meta
    return manifest


def auto_picks(manifest: dict, acceptability_db: float,
               splits: tuple = ("train", "val")) -> dict:
    """Synthetic rater: one pick per subject at a fixed acceptability level.

    For the first slice of each subject, h is the noisiest version whose
    measured SNR meets the acceptability level; h = m_t + 1 when none does,
    h = 0 when even the noisiest version clears it by a full rung.
    """
    picks = {}
    seen = set()
    for e in manifest["entries"]:
        if e["split"] not in splits or e["subject_id"] in seen:
            continue
        if e["slice_index"] != 0:
            continue
        seen.add(e["subject_id"])
        snr = e["heuristic"]["snr"]
        m_t = len(snr)
        rung = (manifest["config"]["snr_high_db"] - manifest["config"]["snr_low_db"]) / (m_t - 1)
        acceptable = [v for v in range(1, m_t + 1) if snr[v - 1] >= acceptability_db]
        if not acceptable:
            picks[e["slice_id"]] = m_t + 1
        elif snr[0] >= acceptability_db + rung:
            picks[e["slice_id"]] = 0
        else:
            picks[e["slice_id"]] = acceptable[0]
    return picks


def proxy_ruler_score(level_db: float | None, ruler: ImageRuler) -> int:
    """Ruler rung nearest an injected dB level; clean images take the top rung."""
    if level_db is None:
        return ruler.m_r - 1
    ladder = np.asarray(ruler.targets_db)
    return int(np.argmin(np.abs(ladder - level_db)))


def proxy_pass(level_db: float | None, ruler: ImageRuler) -> bool:
    """dB-space analogue of the ruler pass/fail rule."""
    if ruler.threshold is None:
        raise ValueError("ruler has no threshold")
    if level_db is None:
        return True
    ta, tb = ruler.threshold
    return bool(level_db >= 0.5 * (ruler.targets_db[ta] + ruler.targets_db[tb]))


def noise_training_data(manifest: dict, root, split: str, method: str,
                        labels: str = "calibrated") -> list:
    """NoiseSet list for a split; targets from calibrated or raw heuristic scores."""
    from .net import NoiseSet

    root = Path(root)
    out = []
    for e in manifest["entries"]:
        if e["split"] != split:
            continue
        if labels == "calibrated":
            targets = e["calibrated"].get(method)
            if targets is None:
                raise MissingLabelError(
                    f"entry {e['slice_id']} has no calibrated {method} scores; run calibrate")
        elif labels == "heuristic":
            targets = e["heuristic"][method]
        else:
            raise ValueError(f"labels must be 'calibrated' or 'heuristic', got {labels!r}")
        images = np.stack([fileio.read_img(root / rel).pixels.astype(np.float32)
                           for rel in e["versions"]])
        out.append(NoiseSet(images=images, targets=np.asarray(targets)))
    return out


def motion_training_data(manifest: dict, root, split: str) -> list:
    """MotionPair list: each entry's motion-injected image with its clean version."""
    from .net import MotionPair

    root = Path(root)
    out = []
    for e in manifest["entries"]:
        if e["split"] != split:
            continue
        corrupted = fileio.read_img(root / e["motion"]).pixels.astype(np.float32)
        original = fileio.read_img(root / e["versions"][-1]).pixels.astype(np.float32)
        out.append(MotionPair(corrupted=corrupted, original=original))
    return out


def single_best_threshold(raw_scores: list, labels: list, registry: dict) -> float:
    """Best fixed pass threshold from a 100-value grid over the rulers' scores.

    The grid spans the lowest to highest cached score across every ruler in
    the registry; ties in accuracy resolve to the lower threshold.
    """
    raw = np.asarray(raw_scores, dtype=np.float64)
    lab = np.asarray(labels, dtype=bool)
    if raw.size == 0 or raw.shape != lab.shape:
        raise ValueError("need equal-length non-empty scores and labels")
    cached = [r.s_ruler for r in registry.values() if r.s_ruler is not None]
    if not cached:
        raise ValueError("registry has no cached ruler scores")
    allscores = np.concatenate(cached)
    grid = np.linspace(allscores.min(), allscores.max(), 100)
    best_th, best_acc = grid[0], -1.0
    for th in grid:
        acc = float(np.mean((raw >= th) == lab))
        if acc > best_acc:
            best_th, best_acc = float(th), acc
    return best_th
