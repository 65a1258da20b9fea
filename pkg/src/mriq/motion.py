"""Rigid-motion artifact simulation.

The object is assumed to hold each position for a whole shot: position
changes happen only at shot boundaries of the multi-shot acquisition.  For
every segment of constant position, the coil-combined complex image is
rotated/shifted with bicubic spline interpolation (zero-filled boundary),
re-encoded through the coil maps, and only that segment's share of the
acquisition schedule is copied into the composite k-space.  The composite
is then reconstructed with the usual sum-of-squares.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .fourier import fft2c
from .kspace import KSpaceVolume, recon_coil_combined, recon_sos
from .phantom import CoilMaps, MagnitudeImage

MAX_ROTATION_DEG = 1.0
MAX_SHIFT_PX = 3.0


@dataclass
class MotionTrajectory:
    """Piecewise-constant rigid positions over the shots of one acquisition.

    ``moves[j]`` is the (rotation_degrees, shift_x, shift_y) of position j
    relative to the previous position (position 0 relative to the scanner
    frame).  ``cut_points`` are the shot indices at which the position
    advances; segment j covers shots [cut_points[j-1], cut_points[j]).
    """

    moves: list  # [(rot_deg, dx, dy)]
    cut_points: list  # strictly increasing shot indices, len == len(moves) - 1

    def __post_init__(self):
        if len(self.moves) < 1:
            raise ValueError("trajectory needs at least one position")
        for rot, dx, dy in self.moves:
            if abs(rot) > MAX_ROTATION_DEG or abs(dx) > MAX_SHIFT_PX or abs(dy) > MAX_SHIFT_PX:
                raise ValueError("move exceeds 1 degree / 3 pixel limits")
        cuts = list(self.cut_points)
        if len(cuts) != len(self.moves) - 1:
            raise ValueError("need exactly one cut point between consecutive positions")
        if any(c2 <= c1 for c1, c2 in zip(cuts, cuts[1:])) or any(c < 1 for c in cuts):
            raise ValueError("cut points must be strictly increasing and >= 1")

    @property
    def n_positions(self) -> int:
        return len(self.moves)

    def cumulative_positions(self) -> np.ndarray:
        """Absolute (rot_deg, dx, dy) of each segment in the scanner frame."""
        return np.cumsum(np.asarray(self.moves, dtype=np.float64), axis=0)


def sample_trajectory(rng_seed: int, n_shots: int) -> MotionTrajectory:
    """Random trajectory: 2 to 4 positions, each within 1 deg / 3 px of the last.

    Cut points are drawn uniformly without replacement from the interior
    shot boundaries, so the time between moves is random.
    """
    if n_shots < 4:
        raise ValueError(f"need at least 4 shots, got {n_shots}")
    rng = np.random.default_rng(rng_seed)
    n_pos = int(rng.integers(2, 5))
    moves = [(float(rng.uniform(-MAX_ROTATION_DEG, MAX_ROTATION_DEG)),
              float(rng.uniform(-MAX_SHIFT_PX, MAX_SHIFT_PX)),
              float(rng.uniform(-MAX_SHIFT_PX, MAX_SHIFT_PX))) for _ in range(n_pos)]
    cuts = sorted(int(c) for c in rng.choice(np.arange(1, n_shots), size=n_pos - 1, replace=False))
    return MotionTrajectory(moves=moves, cut_points=cuts)


def transform_rigid(image: np.ndarray, rot_deg: float, dx: float, dy: float) -> np.ndarray:
    """Rotate about the image center then shift, bicubic, zero boundary.

    Rotation is counterclockwise in array coordinates; dx shifts along the
    second (column) axis and dy along the first (row) axis.
    """
    th = np.deg2rad(rot_deg)
    c, s = np.cos(th), np.sin(th)
    rot = np.array([[c, -s], [s, c]])
    center = (np.asarray(image.shape, dtype=np.float64) - 1) / 2.0
    shift = np.array([dy, dx], dtype=np.float64)
    # output(p) = input(R^-1 (p - center - shift) + center)
    matrix = rot.T
    offset = center - rot.T @ (center + shift)
    return ndimage.affine_transform(image, matrix, offset=offset, order=3,
                                    mode="constant", cval=0.0)


def inject_motion(k: KSpaceVolume, maps: CoilMaps, traj: MotionTrajectory) -> MagnitudeImage:
    """Compose a motion-corrupted acquisition from one clean k-space."""
    if maps.n_coils != k.n_coils:
        raise ValueError(f"coil count mismatch: k-space {k.n_coils}, maps {maps.n_coils}")
    if maps.size != k.n_lines:
        raise ValueError("coil map size does not match k-space")
    n_shots = k.n_shots
    if any(c >= n_shots for c in traj.cut_points):
        raise ValueError("trajectory cut points exceed the shot count")

    x_o = recon_coil_combined(k, maps)
    boundaries = [0] + list(traj.cut_points) + [n_shots]
    shot_lines = k.shot_lines()
    composite = np.zeros_like(k.samples)
    for seg, (rot, dx, dy) in enumerate(traj.cumulative_positions()):
        moved = transform_rigid(x_o, rot, dx, dy)
        encoded = fft2c(moved[None, :, :] * maps.maps)
        lines = [ln for shot in range(boundaries[seg], boundaries[seg + 1])
                 for ln in shot_lines.get(shot, [])]
        composite[:, lines, :] = encoded[:, lines, :]
    out = KSpaceVolume(samples=composite, acquisition_order=k.acquisition_order,
                       etl=k.etl, scan_type=k.scan_type, slice_id=k.slice_id)
    return recon_sos(out)
