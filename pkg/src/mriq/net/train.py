"""Alternating dual-task training.

Noise mini-batches are two version sets (2 x m_t images) regressed against
their calibrated scores with an RMSE loss; motion mini-batches are five
(corrupted, original) pairs classified with BCE.  In dual mode the two
batch kinds strictly alternate and each step updates only the active
branch plus the shared trunk, so one task never touches the other task's
branch parameters.  Everything is driven by a single seeded generator, so
a fixed seed reproduces the final weights bit for bit.
"""

from dataclasses import dataclass, field

import numpy as np

from .losses import loss_motion, loss_motion_grad_logits, loss_noise, loss_noise_grad
from .model import DualTaskNet, NetConfig


@dataclass
class TrainConfig:
    mode: str = "noise"  # noise | motion | dual
    epochs: int = 30
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    sets_per_noise_batch: int = 2
    pairs_per_motion_batch: int = 5
    input_size: int = 128
    dtype: str = "float32"
    standardize_targets: bool = True


class Adam:
    def __init__(self, params: list, lr: float, beta1: float, beta2: float, eps: float):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.state = {id(p): [np.zeros_like(p.value), np.zeros_like(p.value), 0] for p in params}

    def step(self, params: list):
        for p in params:
            m, v, t = self.state[id(p)]
            t += 1
            g = p.grad
            m[:] = self.beta1 * m + (1 - self.beta1) * g
            v[:] = self.beta2 * v + (1 - self.beta2) * g * g
            mhat = m / (1 - self.beta1**t)
            vhat = v / (1 - self.beta2**t)
            p.value -= (self.lr * mhat / (np.sqrt(vhat) + self.eps)).astype(p.value.dtype)
            self.state[id(p)][2] = t


class NoiseSet:
    """Images and targets of one version set (arrays of length m_t)."""

    def __init__(self, images: np.ndarray, targets: np.ndarray):
        self.images = np.asarray(images)
        self.targets = np.asarray(targets, dtype=np.float64)
        if len(self.images) != len(self.targets):
            raise ValueError("images/targets length mismatch")


class MotionPair:
    """A motion-corrupted image and its clean counterpart."""

    def __init__(self, corrupted: np.ndarray, original: np.ndarray):
        self.corrupted = np.asarray(corrupted)
        self.original = np.asarray(original)


def _noise_batches(sets: list, per_batch: int, rng: np.random.Generator):
    order = rng.permutation(len(sets))
    for i in range(0, len(order) - per_batch + 1, per_batch):
        chunk = [sets[j] for j in order[i : i + per_batch]]
        images = np.concatenate([s.images for s in chunk])
        targets = np.concatenate([s.targets for s in chunk])
        yield images, targets


def _motion_batches(pairs: list, per_batch: int, rng: np.random.Generator):
    order = rng.permutation(len(pairs))
    for i in range(0, len(order) - per_batch + 1, per_batch):
        chunk = [pairs[j] for j in order[i : i + per_batch]]
        images = np.concatenate([np.stack([p.corrupted, p.original]) for p in chunk])
        targets = np.tile([0.0, 1.0], per_batch)
        yield images, targets


def train(noise_data: list, motion_data: list, config: TrainConfig,
          net: DualTaskNet | None = None) -> tuple:
    """Train a network; returns (net, history).

    ``noise_data`` is a list of NoiseSet, ``motion_data`` a list of
    MotionPair; either may be empty when the mode does not use it.
    """
    if config.mode not in ("noise", "motion", "dual"):
        raise ValueError(f"unknown training mode {config.mode!r}")
    if config.mode in ("noise", "dual") and not noise_data:
        raise ValueError("noise training requires labeled noise sets")
    if config.mode in ("motion", "dual") and not motion_data:
        raise ValueError("motion training requires motion pairs")

    if net is None:
        net = DualTaskNet(NetConfig(input_size=config.input_size, dtype=config.dtype,
                                    seed=config.seed))
    net.train_seed = config.seed

    if config.mode in ("noise", "dual") and config.standardize_targets:
        all_targets = np.concatenate([s.targets for s in noise_data])
        net.output_offset = float(np.mean(all_targets))
        net.output_scale = float(max(np.std(all_targets), 1e-6))

    rng = np.random.default_rng(config.seed)
    # Small datasets cannot fill the canonical batch shapes; clamp rather
    # than silently yielding no batches.
    noise_bs = min(config.sets_per_noise_batch, len(noise_data)) if noise_data else 0
    motion_bs = min(config.pairs_per_motion_batch, len(motion_data)) if motion_data else 0
    opt = Adam(net.all_params(), config.learning_rate, config.beta1, config.beta2,
               config.adam_eps)
    trunk = net.param_group("trunk")
    noise_params = trunk + net.param_group("noise")
    motion_params = trunk + net.param_group("motion")

    def noise_step(images, targets):
        net.zero_grad()
        pred = net.forward_noise(images, train=True)
        value = loss_noise(pred, targets)
        net.backward_noise(loss_noise_grad(pred, targets))
        opt.step(noise_params)
        net.project()
        return value

    def motion_step(images, targets):
        net.zero_grad()
        prob = net.forward_motion(images, train=True)
        value = loss_motion(prob, targets)
        net.backward_motion(loss_motion_grad_logits(prob, targets))
        opt.step(motion_params)
        net.project()
        return value

    history = []
    for epoch in range(config.epochs):
        noise_losses, motion_losses = [], []
        if config.mode == "noise":
            for images, targets in _noise_batches(noise_data, noise_bs, rng):
                noise_losses.append(noise_step(images, targets))
        elif config.mode == "motion":
            for images, targets in _motion_batches(motion_data, motion_bs, rng):
                motion_losses.append(motion_step(images, targets))
        else:
            # Strict alternation; the motion stream cycles independently so
            # one epoch is defined by a full pass over the noise sets.
            motion_iter = _motion_batches(motion_data, motion_bs, rng)
            for images, targets in _noise_batches(noise_data, noise_bs, rng):
                noise_losses.append(noise_step(images, targets))
                try:
                    m_images, m_targets = next(motion_iter)
                except StopIteration:
                    motion_iter = _motion_batches(motion_data, motion_bs, rng)
                    m_images, m_targets = next(motion_iter)
                motion_losses.append(motion_step(m_images, m_targets))
        history.append({
            "epoch": epoch,
            "noise_loss": float(np.mean(noise_losses)) if noise_losses else None,
            "motion_loss": float(np.mean(motion_losses)) if motion_losses else None,
        })
    return net, history
