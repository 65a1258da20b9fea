"""Evaluation battery: accuracy, ruler-score error, agreement, correlation."""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError


def binary_metrics(predicted: list, labels: list) -> tuple:
    """(accuracy, 2x2 confusion); rows are true class, columns predicted,
    class order [fail=0, pass=1]."""
    pred = np.asarray(predicted, dtype=int)
    lab = np.asarray(labels, dtype=int)
    if pred.size == 0 or pred.shape != lab.shape:
        raise ValueError("prediction/label lists must be equal-length and non-empty")
    confusion = np.zeros((2, 2), dtype=int)
    for t, p in zip(lab, pred):
        confusion[t, p] += 1
    return float(np.trace(confusion) / confusion.sum()), confusion


def ruler_score_mae(predicted: list, labels: list) -> float:
    pred = np.asarray(predicted, dtype=np.float64)
    lab = np.asarray(labels, dtype=np.float64)
    if pred.size == 0 or pred.shape != lab.shape:
        raise ValueError("prediction/label lists must be equal-length and non-empty")
    return float(np.mean(np.abs(pred - lab)))


def ruler_confusion(predicted: list, labels: list, m_r: int) -> np.ndarray:
    confusion = np.zeros((m_r, m_r), dtype=int)
    for t, p in zip(labels, predicted):
        confusion[int(t), int(p)] += 1
    return confusion


def _alpha_interval(a: np.ndarray, b: np.ndarray) -> float:
    """Two-rater Krippendorff's alpha with interval distance, via the
    coincidence matrix of the paired ratings."""
    values = np.concatenate([a, b])
    cats = np.unique(values)
    if len(cats) < 2:
        raise DegenerateInputError("all ratings fall in one category")
    index = {c: i for i, c in enumerate(cats)}
    m = len(cats)
    coincidence = np.zeros((m, m), dtype=np.float64)
    for x, y in zip(a, b):
        coincidence[index[x], index[y]] += 1.0
        coincidence[index[y], index[x]] += 1.0
    n_c = coincidence.sum(axis=1)
    n = n_c.sum()
    delta = (cats[:, None] - cats[None, :]) ** 2
    d_o = (coincidence * delta).sum() / n
    d_e = (np.outer(n_c, n_c) * delta).sum() / (n * (n - 1))
    return float(1.0 - d_o / d_e)


def krippendorff_alpha(ratings_a: list, ratings_b: list, n_bootstrap: int = 1000,
                       seed: int = 0) -> tuple:
    """(alpha, (ci_low, ci_high)) for two aligned ordinal raters.

    The 95% interval is a percentile bootstrap over items; degenerate
    resamples (a single category) are skipped, and the interval is widened
    to include the point estimate if a skewed resample distribution would
    otherwise exclude it.
    """
    a = np.asarray(ratings_a, dtype=np.float64)
    b = np.asarray(ratings_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("ratings must be two equal-length 1D lists")
    if len(a) < 2:
        raise ValueError("need at least 2 items")
    point = _alpha_interval(a, b)
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(n_bootstrap):
        idx = rng.integers(0, len(a), len(a))
        try:
            samples.append(_alpha_interval(a[idx], b[idx]))
        except DegenerateInputError:
            continue
    if samples:
        lo, hi = np.percentile(samples, [2.5, 97.5])
    else:
        lo = hi = point
    return point, (float(min(lo, point)), float(max(hi, point)))


def _ranks(x: np.ndarray) -> np.ndarray:
    """Average ranks with ties sharing their mean rank."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(scores: list, levels: list) -> float:
    """Rank correlation with average ranks for ties."""
    x = np.asarray(scores, dtype=np.float64)
    y = np.asarray(levels, dtype=np.float64)
    if x.shape != y.shape or len(x) < 3:
        raise ValueError("need two equal-length lists of >= 3 items")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DegenerateInputError("constant input has no rank correlation")
    rx, ry = _ranks(x), _ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    return float(np.sum(rx * ry) / np.sqrt(np.sum(rx**2) * np.sum(ry**2)))


@dataclass
class EvalReport:
    accuracy: float
    score_mae: float
    confusion_binary: np.ndarray
    confusion_ruler: np.ndarray
    krippendorff_alpha: float
    alpha_ci: tuple
    spearman: float
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        cb = np.asarray(self.confusion_binary)
        recomputed = float(np.trace(cb) / cb.sum())
        if abs(recomputed - self.accuracy) > 1e-12:
            raise ValueError("accuracy does not match the binary confusion matrix")

    def to_json(self) -> str:
        doc = {
            "accuracy": self.accuracy,
            "score_mae": self.score_mae,
            "confusion_binary": np.asarray(self.confusion_binary).tolist(),
            "confusion_ruler": np.asarray(self.confusion_ruler).tolist(),
            "krippendorff_alpha": self.krippendorff_alpha,
            "alpha_ci": list(self.alpha_ci),
            "spearman": self.spearman,
            "extras": self.extras,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [
            "metric                        value",
            "-" * 42,
            f"binary accuracy               {self.accuracy:.4f}",
            f"ruler-score MAE               {self.score_mae:.4f}",
            f"krippendorff alpha            {self.krippendorff_alpha:.4f} "
            f"[{self.alpha_ci[0]:.4f}, {self.alpha_ci[1]:.4f}]",
            f"spearman (score vs level)     {self.spearman:.4f}",
        ]
        for key in sorted(self.extras):
            value = self.extras[key]
            shown = f"{value:.4f}" if isinstance(value, float) else str(value)
            lines.append(f"{key:<30}{shown}")
        lines.append("")
        lines.append("binary confusion (rows true fail/pass, cols predicted):")
        for row in np.asarray(self.confusion_binary):
            lines.append("  " + " ".join(f"{v:6d}" for v in row))
        lines.append("ruler-score confusion (rows true, cols predicted):")
        for row in np.asarray(self.confusion_ruler):
            lines.append("  " + " ".join(f"{v:4d}" for v in row))
        return "\n".join(lines) + "\n"
