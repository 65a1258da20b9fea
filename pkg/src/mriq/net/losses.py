"""Training losses: RMSE for the noise score, BCE for motion."""

import numpy as np

BCE_EPS = 1e-7


def loss_noise(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Root mean squared residual over the batch."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.size == 0:
        raise ValueError("empty batch")
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    return float(np.sqrt(np.mean((p - t) ** 2)))


def loss_noise_grad(predictions: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """d loss_noise / d predictions (zero at exact fit, where RMSE has a kink)."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    value = loss_noise(p, t)
    if value < 1e-12:
        return np.zeros_like(p)
    return (p - t) / (p.size * value)


def loss_motion(probabilities: np.ndarray, targets: np.ndarray) -> float:
    """Mean binary cross-entropy; probabilities clamped to [eps, 1-eps]."""
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if p.size == 0:
        raise ValueError("empty batch")
    if p.shape != y.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {y.shape}")
    p = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def loss_motion_grad_logits(probabilities: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """d loss_motion / d logits, with the sigmoid folded in: (p - y) / n."""
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    return (p - y) / p.size
