from .dn import BETA_MIN, dn_backward, dn_forward
from .losses import loss_motion, loss_noise
from .model import DualTaskNet, NetConfig, checkpoint_hash
from .train import MotionPair, NoiseSet, TrainConfig, train

__all__ = [
    "BETA_MIN", "dn_backward", "dn_forward", "loss_motion", "loss_noise",
    "DualTaskNet", "NetConfig", "checkpoint_hash", "MotionPair", "NoiseSet",
    "TrainConfig", "train",
]
