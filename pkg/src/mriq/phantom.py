"""Synthetic 2D phantoms and receiver-coil sensitivity maps.

Phantoms stand in for clinical slices: a handful of overlapping ellipses of
differing intensity on a bright background disc, plus a small amount of
fine multiplicative texture so that graded noise levels remain perceptually
distinguishable.  Different scan types get different global signal
amplitudes, which is what makes no-reference noise estimates content-biased
in the same way real scans are.

Coil maps are smooth complex Gaussian lobes placed on a circle around the
field of view, sum-of-squares normalized so that the multi-coil forward and
inverse models are exact inverses of each other.
"""

import zlib
from dataclasses import dataclass, field

import numpy as np

# Signal amplitude by scan type.  Fat-suppressed (-fs) scans sit lower than
# their non-suppressed (-nfs) counterparts; unknown types fall back to a
# hash-derived value in the same range so any identifier works.
SCAN_TYPE_AMPLITUDE = {
    "knee-fs": 0.55,
    "knee-nfs": 1.0,
    "brain-fs": 1.65,
    "brain-nfs": 3.0,
    "elbow-fs": 0.7,
    "elbow-nfs": 1.3,
    "hip-fs": 0.9,
    "hip-nfs": 1.9,
}


# Intrinsic SNR of the simulated "original" acquisition.
FLOOR_SNR_DB = 32.0


def scan_type_amplitude(scan_type: str) -> float:
    """Global signal scale for a scan type (deterministic for any string)."""
    if scan_type in SCAN_TYPE_AMPLITUDE:
        return SCAN_TYPE_AMPLITUDE[scan_type]
    u = zlib.crc32(scan_type.encode("utf-8")) / 2**32
    return 0.5 * 4.0**u


@dataclass
class Phantom:
    """A square complex-valued slice with at least one nonzero pixel."""

    pixels: np.ndarray
    scan_type: str

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"phantom must be square 2D, got shape {p.shape}")
        if not np.all(np.isfinite(p.real)) or not np.all(np.isfinite(p.imag)):
            raise ValueError("phantom contains non-finite values")
        if not np.any(p != 0):
            raise ValueError("phantom is identically zero")
        self.pixels = p.astype(np.complex128, copy=False)

    @property
    def size(self) -> int:
        return self.pixels.shape[0]


@dataclass
class CoilMaps:
    """Per-coil complex sensitivities, sum-of-squares normalized to 1."""

    maps: np.ndarray  # (n_coils, H, W) complex

    def __post_init__(self):
        m = np.asarray(self.maps)
        if m.ndim != 3 or m.shape[0] < 1:
            raise ValueError(f"coil maps must be (n_coils, H, W), got {m.shape}")
        sos = np.sum(np.abs(m) ** 2, axis=0)
        if np.min(sos) <= 0:
            raise ValueError("coil sensitivity sum-of-squares vanishes somewhere")
        self.maps = m.astype(np.complex128, copy=False)

    @property
    def n_coils(self) -> int:
        return self.maps.shape[0]

    @property
    def size(self) -> int:
        return self.maps.shape[1]


@dataclass
class MagnitudeImage:
    """Reconstructed magnitude image with provenance metadata."""

    pixels: np.ndarray
    slice_id: str = ""
    scan_type: str = ""
    version: int | None = None

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        if p.ndim != 2:
            raise ValueError(f"magnitude image must be 2D, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.min(p) < 0:
            raise ValueError("magnitude image must be finite and non-negative")
        self.pixels = p

    @property
    def shape(self) -> tuple:
        return self.pixels.shape


def _ellipse_mask(size: int, cx: float, cy: float, rx: float, ry: float, theta: float) -> np.ndarray:
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    xs, ys = x - cx, y - cy
    c, s = np.cos(theta), np.sin(theta)
    u = (c * xs + s * ys) / rx
    v = (-s * xs + c * ys) / ry
    return (u * u + v * v) <= 1.0


def generate_phantom(seed: int, size: int, scan_type: str) -> Phantom:
    """Deterministic square phantom with >= 3 internal structures.

    Layout: a background disc covering most of the field of view, three to
    five inner ellipses with distinct intensities (some brighter, some
    darker than the background), ~1.5% multiplicative fine texture inside
    the support, and a gentle quadratic phase so the slice is genuinely
    complex-valued.
    """
    if size < 32:
        raise ValueError(f"phantom size must be >= 32, got {size}")
    rng = np.random.default_rng([seed, zlib.crc32(scan_type.encode("utf-8")), size])
    # Per-slice signal jitter (+-3 dB) on top of the scan-type amplitude:
    # slice-dependent content bias is what label calibration exists to fix.
    amp = scan_type_amplitude(scan_type) * 2.0 ** rng.uniform(-0.5, 0.5)

    mag = np.zeros((size, size), dtype=np.float64)
    c0 = size / 2.0
    body_r = 0.42 * size
    body = _ellipse_mask(size, c0 + rng.uniform(-1, 1), c0 + rng.uniform(-1, 1),
                         body_r * rng.uniform(0.95, 1.05), body_r * rng.uniform(0.85, 1.0),
                         rng.uniform(0, np.pi))
    mag[body] = 0.55 * amp

    n_inner = int(rng.integers(3, 6))
    # Distinct contrast levels, alternating brighter/darker than background.
    levels = 0.55 + np.linspace(0.45, -0.38, n_inner) * rng.uniform(0.85, 1.0)
    rng.shuffle(levels)
    for lev in levels:
        r = rng.uniform(0.06, 0.17) * size
        ang = rng.uniform(0, 2 * np.pi)
        d = rng.uniform(0.0, 0.24) * size
        m = _ellipse_mask(size, c0 + d * np.cos(ang), c0 + d * np.sin(ang),
                          r, r * rng.uniform(0.5, 1.0), rng.uniform(0, np.pi))
        mag[m] = lev * amp

    # Fine texture: lightly smoothed white noise, multiplicative inside the
    # support only (air stays exactly zero).
    tex = rng.standard_normal((size, size))
    k = np.fft.fftfreq(size)
    lp = np.exp(-((k[:, None] ** 2 + k[None, :] ** 2) / (2 * 0.18**2)))
    tex = np.real(np.fft.ifft2(np.fft.fft2(tex) * lp))
    tex /= np.std(tex)
    support = mag > 0
    mag[support] *= 1.0 + 0.015 * tex[support]
    mag = np.clip(mag, 0.0, None)

    # Smooth low-order phase, a stand-in for B0/receive phase.
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    xs, ys = (x - c0) / size, (y - c0) / size
    a, b, c = rng.uniform(-1.0, 1.0, 3)
    phase = 0.6 * np.pi * (a * xs + b * ys + c * xs * ys)
    pixels = mag * np.exp(1j * phase)

    # Scanner noise floor at ~32 dB, like a real "original" acquisition:
    # keeps air from being identically zero, which no-reference noise
    # estimators (reasonably) never expect.
    sigma = np.sqrt(np.sum(mag**2) / (10 ** (FLOOR_SNR_DB / 10.0) * 2 * size * size))
    pixels += sigma * (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size)))
    return Phantom(pixels=pixels, scan_type=scan_type)


def _periodized_gaussian(size: int, cx: float, cy: float, sigma: float) -> np.ndarray:
    """Gaussian lobe wrapped on the torus so it has no wrap-around seam."""
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    out = np.zeros((size, size), dtype=np.float64)
    for dx in (-2, -1, 0, 1, 2):
        for dy in (-2, -1, 0, 1, 2):
            out += np.exp(-(((x - cx + dx * size) ** 2) + ((y - cy + dy * size) ** 2)) / (2 * sigma**2))
    return out


def _bandlimit(maps: np.ndarray, size: int) -> np.ndarray:
    """Zero all spatial frequencies outside the central size/8 square."""
    cut = max(size // 16, 1)
    f = np.fft.fftshift(np.fft.fft2(maps, axes=(-2, -1)), axes=(-2, -1))
    fx = np.arange(size) - size // 2
    keep = (np.abs(fx[:, None]) <= cut) & (np.abs(fx[None, :]) <= cut)
    f *= keep
    return np.fft.ifft2(np.fft.ifftshift(f, axes=(-2, -1)), axes=(-2, -1))


def synth_coil_maps(size: int, n_coils: int, seed: int) -> CoilMaps:
    """Smooth synthetic coil sensitivities.

    Complex Gaussian lobes (width 0.5 x FOV) centered on a circle of radius
    0.6 x FOV around the image center, each with a gentle linear phase ramp
    pointing inward.  Maps are low-pass filtered to the central eighth of
    k-space and then sum-of-squares normalized, so ``sum_i |s_i|^2 == 1``
    exactly at every pixel.  A single coil degenerates to the constant map 1.
    """
    if not 1 <= n_coils <= 32:
        raise ValueError(f"n_coils must be in [1, 32], got {n_coils}")
    rng = np.random.default_rng([seed, n_coils, size])
    c0 = (size - 1) / 2.0
    sigma = 0.5 * size
    radius = 0.6 * size
    theta0 = rng.uniform(0, 2 * np.pi)

    maps = np.empty((n_coils, size, size), dtype=np.complex128)
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    for i in range(n_coils):
        if n_coils == 1:
            lobe = _periodized_gaussian(size, c0, c0, sigma)
            maps[0] = lobe
            break
        th = theta0 + 2 * np.pi * i / n_coils
        cx = c0 + radius * np.cos(th)
        cy = c0 + radius * np.sin(th)
        lobe = _periodized_gaussian(size, cx, cy, sigma)
        # 0.4 cycles of linear phase across the FOV, plus a per-coil offset.
        ramp = -0.4 * 2 * np.pi * (np.cos(th) * (x - c0) + np.sin(th) * (y - c0)) / size
        maps[i] = lobe * np.exp(1j * (ramp + rng.uniform(0, 2 * np.pi)))

    sos = np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    maps /= sos
    # Alternate band-limiting with renormalization; ending on the normalize
    # step keeps the sum-of-squares exactly 1 while the out-of-band residual
    # introduced by the division shrinks every round.
    for _ in range(5):
        maps = _bandlimit(maps, size)
        sos = np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
        maps /= sos
    if n_coils == 1:
        # Normalization leaves only the phase; keep it exactly real.
        maps = np.abs(maps).astype(np.complex128)
    return CoilMaps(maps=maps)
