import numpy as np
import pytest

from mriq.errors import DegenerateInputError
from mriq.metrics import (EvalReport, binary_metrics, krippendorff_alpha,
                          ruler_confusion, ruler_score_mae, spearman)


def test_binary_metrics_examples():
    acc, conf = binary_metrics([1, 1, 0, 0], [1, 1, 0, 0])
    assert acc == 1.0
    acc, conf = binary_metrics([1, 0, 0, 0], [1, 1, 0, 0])
    assert acc == 0.75
    flipped, _ = binary_metrics([0, 1, 1, 1], [1, 1, 0, 0])
    assert flipped == pytest.approx(1.0 - acc)
    assert conf.sum() == 4
    assert conf[1].sum() == 2  # row sums = class counts


def test_binary_metrics_validation():
    with pytest.raises(ValueError):
        binary_metrics([], [])
    with pytest.raises(ValueError):
        binary_metrics([1], [1, 0])


def test_ruler_score_mae_examples():
    assert ruler_score_mae([4, 2], [4, 2]) == 0.0
    assert ruler_score_mae([4, 2], [5, 5]) == 2.0
    assert ruler_score_mae([3, 4, 5], [1, 2, 3]) == 2.0  # constant offset k -> MAE k


def brute_force_alpha(a, b):
    """Pairwise-sum oracle, independent of the coincidence-matrix code."""
    values = list(a) + list(b)
    n = len(values)
    d_o = sum((x - y) ** 2 + (y - x) ** 2 for x, y in zip(a, b)) / n
    d_e = sum((x - y) ** 2 for x in values for y in values) / (n * (n - 1))
    return 1.0 - d_o / d_e


def test_alpha_perfect_agreement():
    alpha, ci = krippendorff_alpha([0, 1, 2, 1], [0, 1, 2, 1])
    assert alpha == 1.0
    assert ci[0] <= 1.0 <= ci[1]


def test_alpha_reversed_raters_match_oracle():
    a, b = [0, 0, 1, 1], [1, 1, 0, 0]
    alpha, _ = krippendorff_alpha(a, b)
    assert alpha == pytest.approx(brute_force_alpha(a, b), abs=1e-12)
    assert alpha == pytest.approx(-0.75, abs=1e-12)


def test_alpha_independent_uniform_near_zero():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 8, 10_000)
    b = rng.integers(0, 8, 10_000)
    alpha, _ = krippendorff_alpha(a, b, n_bootstrap=50)
    assert -0.05 <= alpha <= 0.05


def test_alpha_degenerate_single_category():
    with pytest.raises(DegenerateInputError):
        krippendorff_alpha([2, 2, 2], [2, 2, 2])


def test_alpha_affine_relabeling_invariance():
    rng = np.random.default_rng(1)
    a = rng.integers(0, 5, 40)
    b = rng.integers(0, 5, 40)
    base, _ = krippendorff_alpha(a, b, n_bootstrap=10)
    scaled, _ = krippendorff_alpha(3.0 * a - 7.0, 3.0 * b - 7.0, n_bootstrap=10)
    assert scaled == pytest.approx(base, abs=1e-12)


def test_alpha_ci_contains_point():
    rng = np.random.default_rng(2)
    for seed in range(5):
        a = rng.integers(0, 4, 30)
        b = np.clip(a + rng.integers(-1, 2, 30), 0, 3)
        alpha, (lo, hi) = krippendorff_alpha(a, b, seed=seed)
        assert lo <= alpha <= hi


def test_spearman_examples():
    assert spearman([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)
    assert spearman([3, 2, 1], [10, 20, 30]) == pytest.approx(-1.0)
    assert spearman([1, 2, 3, 5, 4], [1, 2, 3, 4, 5]) == pytest.approx(0.9)


def test_spearman_validation():
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2])
    with pytest.raises(DegenerateInputError):
        spearman([1.0, 1.0, 1.0], [1, 2, 3])


def test_spearman_average_ranks_for_ties():
    # against scipy's definition on a tied sample
    from scipy.stats import spearmanr

    x = [1, 2, 2, 3, 5, 5, 5]
    y = [2, 1, 4, 4, 6, 7, 8]
    assert spearman(x, y) == pytest.approx(spearmanr(x, y).statistic, abs=1e-12)


def test_eval_report_consistency_and_serialization():
    acc, conf = binary_metrics([1, 0, 1], [1, 1, 1])
    report = EvalReport(accuracy=acc, score_mae=0.5, confusion_binary=conf,
                        confusion_ruler=ruler_confusion([1, 2], [1, 1], 8),
                        krippendorff_alpha=0.7, alpha_ci=(0.6, 0.8), spearman=0.9)
    text = report.to_text()
    assert "binary accuracy" in text
    doc = report.to_json()
    assert '"accuracy"' in doc
    with pytest.raises(ValueError):
        EvalReport(accuracy=0.99, score_mae=0.5, confusion_binary=conf,
                   confusion_ruler=np.zeros((2, 2)), krippendorff_alpha=0.7,
                   alpha_ci=(0.6, 0.8), spearman=0.9)
