"""Image rulers: graded reference strips that make raw scores interpretable.

A ruler holds m_r versions of one reference slice, v=0 noisiest to
v=m_r-1 clean, spanning a dB range strictly wider than the training range.
Passing all versions through a trained network caches the score vector
S_ruler; a test image's ruler score is then the index of the closest cached
score, and pass/fail compares the raw score against the midpoint of the
two threshold versions.  Because both sides of these comparisons come from
the same network on the same kind of content, content-driven score offsets
cancel.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import MissingRulerError, RulerStateError
from .kspace import forward_kspace, recon_sos, version_snr_targets, inject_noise
from .phantom import CoilMaps, MagnitudeImage, Phantom


@dataclass
class ImageRuler:
    scan_type: str
    versions: list  # m_r MagnitudeImage, noise strictly decreasing with v
    targets_db: list  # dB ladder, one value per version (clean holds the top rung)
    snr_range: tuple  # (low, high) dB the noisy versions were drawn from
    s_ruler: np.ndarray | None = None
    threshold: tuple | None = (3, 3)
    checkpoint_hash: str | None = None

    def __post_init__(self):
        if len(self.versions) < 2:
            raise ValueError("a ruler needs at least 2 versions")
        if len(self.targets_db) != len(self.versions):
            raise ValueError("targets_db must match the version count")
        if self.s_ruler is not None:
            self.s_ruler = np.asarray(self.s_ruler, dtype=np.float64)
            if len(self.s_ruler) != self.m_r:
                raise ValueError("cached score vector length must be m_r")
        if self.threshold is not None:
            ta, tb = self.threshold
            if not 0 <= ta <= tb <= self.m_r - 1:
                raise ValueError(f"threshold {self.threshold} outside 0 <= t_a <= t_b <= {self.m_r - 1}")
            self.threshold = (int(ta), int(tb))

    @property
    def m_r(self) -> int:
        return len(self.versions)


def build_ruler(phantom: Phantom, maps: CoilMaps, m_r: int, snr_range: tuple,
                training_range: tuple, seed: int, etl: int = 8) -> ImageRuler:
    """Simulate a ruler strip; scores stay uncached until a net is available.

    The ruler's dB range must strictly contain the training range so the
    worst and best rungs bracket every quality the model was trained on.
    """
    if m_r < 2:
        raise ValueError(f"m_r must be >= 2, got {m_r}")
    r_low, r_high = snr_range
    t_low, t_high = training_range
    if not (r_low < t_low and r_high > t_high):
        raise ValueError(f"ruler range {snr_range} must strictly contain training range {training_range}")
    targets = version_snr_targets(m_r, r_low, r_high)
    k = forward_kspace(phantom, maps, etl=etl)
    seeds = np.random.SeedSequence(seed).generate_state(m_r - 1)
    versions = []
    for v, (t, s) in enumerate(zip(targets, seeds)):
        img = recon_sos(inject_noise(k, float(t), int(s)), version=v)
        img.slice_id = f"ruler-{phantom.scan_type}"
        versions.append(img)
    clean = recon_sos(k, version=m_r - 1)
    clean.slice_id = f"ruler-{phantom.scan_type}"
    versions.append(clean)
    ladder = list(map(float, targets)) + [float(r_high)]
    default_t = min(3, m_r - 1)
    return ImageRuler(scan_type=phantom.scan_type, versions=versions, targets_db=ladder,
                      snr_range=(float(r_low), float(r_high)), threshold=(default_t, default_t))


def cache_scores(ruler: ImageRuler, net) -> ImageRuler:
    """Return a copy of the ruler with S_ruler filled in by the network."""
    scores = net.score_batch(np.stack([v.pixels for v in ruler.versions]))
    return replace(ruler, s_ruler=np.asarray(scores, dtype=np.float64))


def ruler_score(ruler: ImageRuler, raw: float) -> int:
    """Index of the cached score closest to ``raw``; ties go to the cleaner side."""
    if ruler.s_ruler is None:
        raise RulerStateError("ruler scores are not cached; run cache_scores first")
    diffs = np.abs(ruler.s_ruler - raw)
    return int(np.flatnonzero(diffs == diffs.min())[-1])


def pass_fail(ruler: ImageRuler, raw: float) -> bool:
    """raw >= midpoint of the two threshold versions' cached scores."""
    if ruler.s_ruler is None:
        raise RulerStateError("ruler scores are not cached; run cache_scores first")
    if ruler.threshold is None:
        raise RulerStateError(f"ruler {ruler.scan_type} has no threshold set")
    ta, tb = ruler.threshold
    return bool(raw >= 0.5 * (ruler.s_ruler[ta] + ruler.s_ruler[tb]))


def fat_suppression_tag(scan_type: str) -> str:
    """'fs' / 'nfs' suffix of an anatomy-fs style scan type ('' if absent)."""
    if "-" in scan_type:
        tag = scan_type.rsplit("-", 1)[1].lower()
        if tag in ("fs", "nfs"):
            return tag
    return ""


def select_ruler(registry: dict, scan_type: str) -> ImageRuler:
    """Exact scan-type match, else a ruler with the same fat-suppression tag."""
    if not registry:
        raise MissingRulerError("ruler registry is empty")
    if scan_type in registry:
        return registry[scan_type]
    tag = fat_suppression_tag(scan_type)
    if tag:
        candidates = sorted(st for st in registry if fat_suppression_tag(st) == tag)
        if candidates:
            return registry[candidates[0]]
    raise MissingRulerError(f"no ruler compatible with scan type {scan_type!r}")
