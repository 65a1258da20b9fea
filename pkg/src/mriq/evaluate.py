"""Scoring and evaluation of a trained network against a dataset.

Ground truth on synthetic data is the injected SNR level of each version:
its ruler-score proxy is the nearest rung of the matched ruler's dB ladder
and its pass/fail proxy applies the ruler threshold in dB space.  Clean
versions count as the top rung / pass.
"""

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import fileio
from .dataset import proxy_pass, proxy_ruler_score, single_best_threshold
from .metrics import (EvalReport, binary_metrics, krippendorff_alpha,
                      ruler_confusion, ruler_score_mae, spearman)
from .ruler import pass_fail, ruler_score, select_ruler


@dataclass
class ScoredImage:
    slice_id: str
    scan_type: str
    version: int
    level_db: float | None  # None for the clean version
    raw: float


def score_split(manifest: dict, root, net, split: str) -> list:
    """Raw noise scores for every version image of a split."""
    root = Path(root)
    scored = []
    for e in manifest["entries"]:
        if e["split"] != split:
            continue
        images = np.stack([fileio.read_img(root / rel).pixels for rel in e["versions"]])
        raws = net.score_batch(images)
        m_t = len(e["versions"])
        for v, raw in enumerate(raws, start=1):
            level = e["snr_targets"][v - 1] if v < m_t else None
            scored.append(ScoredImage(slice_id=e["slice_id"], scan_type=e["scan_type"],
                                      version=v, level_db=level, raw=float(raw)))
    return scored


def apply_threshold_overrides(registry: dict, store) -> dict:
    """Registry copy with any store-set thresholds replacing ruler defaults."""
    out = {}
    for scan_type, ruler in registry.items():
        stored = store.threshold(scan_type) if store is not None else None
        out[scan_type] = replace(ruler, threshold=stored) if stored else ruler
    return out


def evaluate_noise(manifest: dict, root, net, registry: dict,
                   scored_val: list | None = None, alpha_seed: int = 0) -> EvalReport:
    """Full noise-task report on the test split.

    When validation scores are provided, the single-best fixed threshold is
    fitted on them and its test accuracy reported alongside the
    ruler-defined accuracy.
    """
    scored = score_split(manifest, root, net, "test")
    if not scored:
        raise ValueError("manifest has no test entries")
    snr_high = manifest["config"]["snr_high_db"]

    rs_pred, rs_true, pf_pred, pf_true, raws, levels = [], [], [], [], [], []
    for s in scored:
        ruler = select_ruler(registry, s.scan_type)
        rs_pred.append(ruler_score(ruler, s.raw))
        pf_pred.append(pass_fail(ruler, s.raw))
        rs_true.append(proxy_ruler_score(s.level_db, ruler))
        pf_true.append(proxy_pass(s.level_db, ruler))
        raws.append(s.raw)
        levels.append(s.level_db if s.level_db is not None else snr_high)

    accuracy, confusion = binary_metrics([int(p) for p in pf_pred], [int(t) for t in pf_true])
    m_r = max(r.m_r for r in registry.values())
    alpha, ci = krippendorff_alpha(rs_pred, rs_true, seed=alpha_seed)
    extras = {}
    if scored_val:
        val_labels = []
        val_raws = []
        for s in scored_val:
            ruler = select_ruler(registry, s.scan_type)
            val_labels.append(proxy_pass(s.level_db, ruler))
            val_raws.append(s.raw)
        th = single_best_threshold(val_raws, val_labels, registry)
        single_acc, _ = binary_metrics([int(r >= th) for r in raws], [int(t) for t in pf_true])
        extras["single_best_threshold"] = float(th)
        extras["single_best_accuracy"] = single_acc
    return EvalReport(
        accuracy=accuracy,
        score_mae=ruler_score_mae(rs_pred, rs_true),
        confusion_binary=confusion,
        confusion_ruler=ruler_confusion(rs_pred, rs_true, m_r),
        krippendorff_alpha=alpha,
        alpha_ci=ci,
        spearman=spearman(raws, levels),
        extras=extras,
    )


def evaluate_motion(manifest: dict, root, net, split: str = "test",
                    threshold: float = 0.5) -> dict:
    """Motion-detection accuracy at the decision threshold.

    Items are (motion-injected, clean) image pairs; the branch emits the
    probability of being motion-free, so predictions below the threshold
    flag motion.
    """
    root = Path(root)
    images, labels = [], []
    for e in manifest["entries"]:
        if e["split"] != split:
            continue
        images.append(fileio.read_img(root / e["motion"]).pixels)
        labels.append(0)
        images.append(fileio.read_img(root / e["versions"][-1]).pixels)
        labels.append(1)
    if not images:
        raise ValueError(f"manifest has no {split} entries")
    probs = net.motion_prob_batch(np.stack(images))
    preds = (probs >= threshold).astype(int)
    accuracy, confusion = binary_metrics(list(preds), labels)
    return {"accuracy": accuracy, "confusion": confusion.tolist(),
            "threshold": threshold, "n_items": len(labels)}
