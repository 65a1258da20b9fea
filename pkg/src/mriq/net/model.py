"""The dual-task quality network.

A shared convolutional trunk with divisive normalization feeds two heads:
a noise branch (conv + DN + global average pool + affine) that emits a
scalar quality score, and a motion branch (conv + batch norm + ReLU +
global average pool + affine + sigmoid) that emits the probability that the
image is free of motion artifact.  Raw noise scores are destandardized with
an output offset/scale fixed at training time so they live on the label
scale.

Checkpoints are self-describing .npz containers: an architecture/config
JSON plus every parameter and running statistic as little-endian float32.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .layers import (BatchNorm2d, Conv2d, Dense, DivisiveNorm, GlobalAvgPool,
                     ReLU, run_backward, run_forward)


@dataclass
class NetConfig:
    input_size: int = 128
    trunk_channels: tuple = (16, 32, 64)
    branch_channels: int = 64
    dtype: str = "float32"
    seed: int = 0


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class DualTaskNet:
    def __init__(self, config: NetConfig):
        self.config = config
        dtype = np.dtype(config.dtype).type
        rng = np.random.default_rng(config.seed)
        c1, c2, c3 = config.trunk_channels
        cb = config.branch_channels
        self.trunk = [
            Conv2d("trunk.conv1", 1, c1, 5, 2, 2, rng, dtype),
            DivisiveNorm("trunk.dn1", c1, dtype),
            Conv2d("trunk.conv2", c1, c2, 3, 2, 1, rng, dtype),
            DivisiveNorm("trunk.dn2", c2, dtype),
            Conv2d("trunk.conv3", c2, c3, 3, 2, 1, rng, dtype),
            DivisiveNorm("trunk.dn3", c3, dtype),
        ]
        self.noise_branch = [
            Conv2d("noise.conv", c3, cb, 3, 2, 1, rng, dtype),
            DivisiveNorm("noise.dn", cb, dtype),
            GlobalAvgPool(),
            Dense("noise.out", cb, 1, rng, dtype),
        ]
        self.motion_branch = [
            Conv2d("motion.conv", c3, cb, 3, 2, 1, rng, dtype),
            BatchNorm2d("motion.bn", cb, dtype=dtype),
            ReLU(),
            GlobalAvgPool(),
            Dense("motion.out", cb, 1, rng, dtype),
        ]
        self.output_offset = 0.0
        self.output_scale = 1.0
        self.train_seed = None
        self.manifest_hash = None

    # ------------------------------------------------------------- structure

    def param_group(self, which: str) -> list:
        layers = {"trunk": self.trunk, "noise": self.noise_branch,
                  "motion": self.motion_branch}[which]
        return [p for layer in layers for p in layer.params()]

    def all_params(self) -> list:
        return self.param_group("trunk") + self.param_group("noise") + self.param_group("motion")

    def project(self):
        for layer in self.trunk + self.noise_branch + self.motion_branch:
            layer.project()

    def _check_batch(self, x: np.ndarray) -> np.ndarray:
        s = self.config.input_size
        if x.ndim == 2:
            x = x[None]
        if x.ndim != 3 or x.shape[1] != s or x.shape[2] != s:
            raise ValueError(f"expected {s}x{s} images, got {x.shape}")
        return np.ascontiguousarray(x[:, None, :, :], dtype=np.dtype(self.config.dtype))

    # --------------------------------------------------------------- forward

    def forward_noise(self, images: np.ndarray, train: bool = False) -> np.ndarray:
        x = self._check_batch(images)
        feat = run_forward(self.trunk, x, train)
        out = run_forward(self.noise_branch, feat, train)
        return out[:, 0].astype(np.float64) * self.output_scale + self.output_offset

    def forward_motion(self, images: np.ndarray, train: bool = False) -> np.ndarray:
        x = self._check_batch(images)
        feat = run_forward(self.trunk, x, train)
        logits = run_forward(self.motion_branch, feat, train)
        return _sigmoid(logits[:, 0])

    def forward(self, image: np.ndarray) -> tuple:
        """Inference on one image: (raw noise score, motion-pass probability)."""
        img = np.asarray(image)
        x = self._check_batch(img)
        feat = run_forward(self.trunk, x, False)
        score = run_forward(self.noise_branch, feat, False)[:, 0]
        logit = run_forward(self.motion_branch, feat, False)[:, 0]
        raw = float(score[0]) * self.output_scale + self.output_offset
        return raw, float(_sigmoid(logit)[0])

    def score_batch(self, images: np.ndarray, batch_size: int = 32) -> np.ndarray:
        """Raw noise scores for a stack of images, eval mode."""
        images = np.asarray(images)
        if images.ndim == 2:
            images = images[None]
        return np.concatenate([self.forward_noise(images[i : i + batch_size])
                               for i in range(0, len(images), batch_size)])

    def motion_prob_batch(self, images: np.ndarray, batch_size: int = 32) -> np.ndarray:
        images = np.asarray(images)
        if images.ndim == 2:
            images = images[None]
        return np.concatenate([self.forward_motion(images[i : i + batch_size])
                               for i in range(0, len(images), batch_size)])

    # -------------------------------------------------------------- backward

    def backward_noise(self, dpred: np.ndarray):
        """Backprop d loss / d (destandardized prediction) through noise + trunk."""
        grad = (dpred * self.output_scale).astype(np.dtype(self.config.dtype))[:, None]
        grad = run_backward(self.noise_branch, grad)
        run_backward(self.trunk, grad)

    def backward_motion(self, dlogits: np.ndarray):
        grad = np.asarray(dlogits, dtype=np.dtype(self.config.dtype))[:, None]
        grad = run_backward(self.motion_branch, grad)
        run_backward(self.trunk, grad)

    def zero_grad(self):
        for p in self.all_params():
            p.zero_grad()

    # ------------------------------------------------------------ checkpoint

    def _state_arrays(self) -> dict:
        arrays = {f"param/{p.name}": p.value for p in self.all_params()}
        for layer in self.motion_branch:
            if isinstance(layer, BatchNorm2d):
                arrays["state/motion.bn.running_mean"] = layer.running_mean
                arrays["state/motion.bn.running_var"] = layer.running_var
        return arrays

    def save(self, path: str):
        meta = {
            "format": "MRIQ-NET1",
            "config": asdict(self.config),
            "output_offset": self.output_offset,
            "output_scale": self.output_scale,
            "train_seed": self.train_seed,
            "manifest_hash": self.manifest_hash,
        }
        arrays = {k: v.astype("<f4") for k, v in self._state_arrays().items()}
        with open(path, "wb") as f:
            np.savez(f, __meta__=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
                     **arrays)

    @classmethod
    def load(cls, path: str) -> "DualTaskNet":
        with np.load(path) as data:
            meta = json.loads(bytes(data["__meta__"]).decode("utf-8"))
            if meta.get("format") != "MRIQ-NET1":
                raise ValueError(f"{path} is not a network checkpoint")
            cfg = meta["config"]
            cfg["trunk_channels"] = tuple(cfg["trunk_channels"])
            net = cls(NetConfig(**cfg))
            dtype = np.dtype(net.config.dtype)
            for p in net.all_params():
                p.value[...] = data[f"param/{p.name}"].astype(dtype)
            for layer in net.motion_branch:
                if isinstance(layer, BatchNorm2d):
                    layer.running_mean = data["state/motion.bn.running_mean"].astype(dtype)
                    layer.running_var = data["state/motion.bn.running_var"].astype(dtype)
        net.output_offset = float(meta["output_offset"])
        net.output_scale = float(meta["output_scale"])
        net.train_seed = meta.get("train_seed")
        net.manifest_hash = meta.get("manifest_hash")
        return net


def checkpoint_hash(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
