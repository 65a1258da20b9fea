"""Human-calibrated training labels.

A rater marks, in each graded version set, the version with the minimum
acceptable noise level (or one of the two out-of-range choices: 0 for
"even noisier would be fine", m_t+1 for "none acceptable").  Those picks
anchor a per-set constant shift that aligns every set's heuristic scores to
a common mean, removing content-dependent bias from the estimator while
preserving within-set gaps exactly.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateInputError, MissingLabelError


@dataclass
class VersionSet:
    """One slice's graded versions with heuristic scores and optional pick."""

    slice_id: str
    scan_type: str
    subject_id: str
    slice_index: int
    heuristic: list  # m_t score values, v=1..m_t
    human_label: int | None = None  # h in [0, m_t + 1]
    versions: list = field(default_factory=list)  # MagnitudeImage, optional

    def __post_init__(self):
        if len(self.heuristic) < 3:
            raise ValueError("a version set needs at least 3 versions")
        self.heuristic = [float(y) for y in self.heuristic]
        if self.human_label is not None:
            h = int(self.human_label)
            if not 0 <= h <= self.m_t + 1:
                raise ValueError(f"human label {h} outside [0, {self.m_t + 1}]")
            self.human_label = h

    @property
    def m_t(self) -> int:
        return len(self.heuristic)


@dataclass
class CalibratedLabels:
    """Calibrated scores per set, with the anchor mean and strength used."""

    scores: list  # one list of m_t floats per set, same order as the input
    mu_h: float
    eta: float


def propagate_labels(sets: list) -> list:
    """Copy each missing pick from the nearest labeled slice of the subject.

    Distance is the absolute slice-index difference; ties go to the lower
    index.  Every subject must have at least one labeled set.
    """
    by_subject: dict = {}
    for s in sets:
        by_subject.setdefault(s.subject_id, []).append(s)
    out = []
    for s in sets:
        if s.human_label is not None:
            out.append(s)
            continue
        labeled = [t for t in by_subject[s.subject_id] if t.human_label is not None]
        if not labeled:
            raise MissingLabelError(f"subject {s.subject_id} has no labeled set")
        nearest = min(labeled, key=lambda t: (abs(t.slice_index - s.slice_index), t.slice_index))
        out.append(replace(s, human_label=nearest.human_label))
    return out


def _anchor(s: VersionSet) -> float:
    """The y value the set's pick points at, extrapolated for h=0 / h=m_t+1."""
    y, h = s.heuristic, s.human_label
    if h == 0:
        return 2 * y[0] - y[1]
    if h == s.m_t + 1:
        return 2 * y[-1] - y[-2]
    return y[h - 1]


def calibration_mean(sets: list) -> float:
    """Mean of the picked scores over sets with an in-range pick.

    Out-of-range picks (0 or m_t+1) are calibrated against extrapolated
    anchors but do not contribute here: their virtual scores are unbounded
    and would skew the anchor.
    """
    picked = []
    for s in sets:
        if s.human_label is None:
            raise MissingLabelError(f"set {s.slice_id} is unlabeled; propagate labels first")
        if 1 <= s.human_label <= s.m_t:
            picked.append(s.heuristic[s.human_label - 1])
    if not picked:
        raise DegenerateInputError("no set has an in-range pick")
    return float(np.mean(picked))


def _shifted_scores(sets: list, mu_h: float, eta: float) -> list:
    return [[y + eta * (mu_h - _anchor(s)) for y in s.heuristic] for s in sets]


def calibrate(sets: list, eta: float = 0.85) -> CalibratedLabels:
    """Shift every set's scores by eta * (mu_h - anchor).

    eta in (0, 1] controls the calibration strength; 1 forces every picked
    score exactly onto the mean.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"calibration strength must be in (0, 1], got {eta}")
    mu_h = calibration_mean(sets)
    return CalibratedLabels(scores=_shifted_scores(sets, mu_h, eta), mu_h=mu_h, eta=eta)
