"""Multi-coil k-space acquisition, reconstruction, and noise injection.

The forward model encodes a complex slice through coil sensitivities and a
unitary 2D Fourier transform, one k-space matrix per coil.  Acquisition
order follows an interleaved multi-shot fast-spin-echo scheme: with
``n_shots`` excitations, shot ``s`` collects phase-encode lines
``s, s + n_shots, s + 2*n_shots, ...`` (one line per echo, at most ``etl``
echoes per shot).  Phase-encode lines are rows of the k-space matrix.

Noise is injected as complex white Gaussian noise with a single variance
shared by the real and imaginary parts of every coil's samples.  Because
quality targets are specified as image-domain SNR in dB, the k-space noise
standard deviation is calibrated with a bisection search against the SNR of
the sum-of-squares reconstruction.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError
from .fourier import fft2c, ifft2c
from .phantom import CoilMaps, MagnitudeImage, Phantom


@dataclass
class KSpaceVolume:
    """Multi-coil Cartesian k-space with its acquisition schedule."""

    samples: np.ndarray  # (n_coils, n_lines, n_read) complex
    acquisition_order: list  # [(shot_index, phase_line_index)] covering each line once
    etl: int
    scan_type: str = ""
    slice_id: str = ""

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 3:
            raise ValueError(f"k-space samples must be (n_coils, H, W), got {s.shape}")
        if self.etl < 1:
            raise ValueError("echo train length must be positive")
        lines = sorted(line for _, line in self.acquisition_order)
        if lines != list(range(s.shape[1])):
            raise ValueError("acquisition_order must cover every phase line exactly once")
        self.samples = s.astype(np.complex128, copy=False)
        self.acquisition_order = [(int(a), int(b)) for a, b in self.acquisition_order]

    @property
    def n_coils(self) -> int:
        return self.samples.shape[0]

    @property
    def n_lines(self) -> int:
        return self.samples.shape[1]

    @property
    def n_shots(self) -> int:
        return max(shot for shot, _ in self.acquisition_order) + 1

    def shot_lines(self) -> dict:
        """Map shot index -> list of phase lines acquired in that shot."""
        out: dict = {}
        for shot, line in self.acquisition_order:
            out.setdefault(shot, []).append(line)
        return out


def interleaved_order(n_lines: int, etl: int) -> list:
    """Interleaved multi-shot FSE schedule: shot s takes lines s, s+n_shots, ..."""
    if etl < 1:
        raise ValueError("echo train length must be positive")
    n_shots = math.ceil(n_lines / etl)
    order = []
    for shot in range(n_shots):
        for line in range(shot, n_lines, n_shots):
            order.append((shot, line))
    return order


def forward_kspace(phantom: Phantom, maps: CoilMaps, etl: int = 8) -> KSpaceVolume:
    """Encode a phantom into multi-coil k-space: K_i = FFT(x * s_i)."""
    if maps.size != phantom.size:
        raise ValueError(f"phantom size {phantom.size} != coil map size {maps.size}")
    samples = fft2c(phantom.pixels[None, :, :] * maps.maps)
    return KSpaceVolume(samples=samples, acquisition_order=interleaved_order(phantom.size, etl),
                        etl=etl, scan_type=phantom.scan_type)


def recon_sos(k: KSpaceVolume, version: int | None = None) -> MagnitudeImage:
    """Sum-of-squares reconstruction: x(p) = sqrt(sum_i |IFFT(K_i)(p)|^2)."""
    coil_images = ifft2c(k.samples)
    pixels = np.sqrt(np.sum(np.abs(coil_images) ** 2, axis=0))
    return MagnitudeImage(pixels=pixels, slice_id=k.slice_id, scan_type=k.scan_type, version=version)


def recon_coil_combined(k: KSpaceVolume, maps: CoilMaps) -> np.ndarray:
    """Complex coil-combined image x_o = sum_i I_i s_i* / sqrt(sum_i |s_i|^2).

    With sum-of-squares normalized maps this is the least-squares inverse of
    the forward model, so re-encoding x_o reproduces the input k-space.
    """
    if maps.n_coils != k.n_coils:
        raise ValueError(f"coil count mismatch: k-space {k.n_coils}, maps {maps.n_coils}")
    sos = np.sum(np.abs(maps.maps) ** 2, axis=0)
    if np.min(sos) < 1e-12 * np.max(sos):
        raise DegenerateInputError("coil sensitivity vanishes inside the field of view")
    coil_images = ifft2c(k.samples)
    return np.sum(coil_images * np.conj(maps.maps), axis=0) / np.sqrt(sos)


def snr_db(reference: np.ndarray, test: np.ndarray) -> float:
    """Reference-based SNR in dB: 10 log10(sum |ref|^2 / sum |ref - test|^2)."""
    ref = np.asarray(reference, dtype=np.float64)
    t = np.asarray(test, dtype=np.float64)
    if ref.shape != t.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {t.shape}")
    num = float(np.sum(ref**2))
    den = float(np.sum((ref - t) ** 2))
    if den == 0.0:
        raise DegenerateInputError("test image is identical to the reference")
    return 10.0 * math.log10(num / den)


def add_kspace_noise(k: KSpaceVolume, sigma: float, rng_seed: int) -> KSpaceVolume:
    """Add WGN of standard deviation ``sigma`` to re and im of every sample."""
    rng = np.random.default_rng(rng_seed)
    noise = rng.standard_normal(k.samples.shape) + 1j * rng.standard_normal(k.samples.shape)
    return KSpaceVolume(samples=k.samples + sigma * noise, acquisition_order=k.acquisition_order,
                        etl=k.etl, scan_type=k.scan_type, slice_id=k.slice_id)


def inject_noise(k: KSpaceVolume, target_snr_db: float, rng_seed: int,
                 tolerance_db: float = 0.5, iterations: int = 20) -> KSpaceVolume:
    """Noise injection calibrated to an image-domain SNR target.

    A single complex WGN realization is drawn from ``rng_seed`` and scaled;
    the scale is found by bisection (default 20 iterations) so that the SNR
    of the sum-of-squares reconstruction against the clean reconstruction
    lands within ``tolerance_db`` of the target.  ``target_snr_db = +inf``
    is the no-noise sentinel and returns the input unchanged.
    """
    if math.isnan(target_snr_db):
        raise ValueError("target SNR must not be NaN")
    if math.isinf(target_snr_db):
        if target_snr_db > 0:
            return KSpaceVolume(samples=k.samples.copy(), acquisition_order=k.acquisition_order,
                                etl=k.etl, scan_type=k.scan_type, slice_id=k.slice_id)
        raise ValueError("target SNR of -inf is not achievable")

    rng = np.random.default_rng(rng_seed)
    noise = rng.standard_normal(k.samples.shape) + 1j * rng.standard_normal(k.samples.shape)
    clean = recon_sos(k).pixels

    def measured(sigma: float) -> float:
        noisy = np.sqrt(np.sum(np.abs(ifft2c(k.samples + sigma * noise)) ** 2, axis=0))
        return snr_db(clean, noisy)

    # Initial scale from the white-noise power balance, then bracket.
    p_sig = float(np.sum(clean**2))
    sigma0 = math.sqrt(p_sig / (10 ** (target_snr_db / 10.0) * clean.size))
    lo, hi = sigma0 / 64.0, sigma0 * 64.0
    for _ in range(60):
        if measured(hi) <= target_snr_db:
            break
        hi *= 4.0
    for _ in range(60):
        if measured(lo) >= target_snr_db:
            break
        lo /= 4.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if measured(mid) >= target_snr_db:
            lo = mid
        else:
            hi = mid
    sigma = 0.5 * (lo + hi)
    got = measured(sigma)
    if abs(got - target_snr_db) > tolerance_db:
        raise RuntimeError(f"noise calibration failed: target {target_snr_db} dB, got {got:.2f} dB")
    return KSpaceVolume(samples=k.samples + sigma * noise, acquisition_order=k.acquisition_order,
                        etl=k.etl, scan_type=k.scan_type, slice_id=k.slice_id)


def version_snr_targets(m_t: int, snr_low_db: float, snr_high_db: float) -> np.ndarray:
    """dB targets for the m_t - 1 noisy versions of a set.

    The full ladder spans [low, high] linearly across all m_t versions; the
    clean version occupies the top rung, so the noisy versions take the
    first m_t - 1 rungs.  (For m_t = 3 on [10, 20] the middle version is
    15 dB.)
    """
    if m_t < 2:
        raise ValueError("need at least two versions")
    return np.linspace(snr_low_db, snr_high_db, m_t)[: m_t - 1]


def version_set_from_kspace(k: KSpaceVolume, m_t: int, snr_low_db: float, snr_high_db: float,
                            seed: int, slice_id: str = "") -> list:
    """m_t graded reconstructions of one k-space: v=1 noisiest ... v=m_t clean."""
    if m_t < 3:
        raise ValueError(f"m_t must be >= 3, got {m_t}")
    if not snr_low_db < snr_high_db:
        raise ValueError("snr_low_db must be < snr_high_db")
    targets = version_snr_targets(m_t, snr_low_db, snr_high_db)
    seeds = np.random.SeedSequence(seed).generate_state(m_t - 1)
    versions = []
    for v, (t, s) in enumerate(zip(targets, seeds), start=1):
        noisy = inject_noise(k, float(t), int(s))
        img = recon_sos(noisy, version=v)
        img.slice_id = slice_id or img.slice_id
        versions.append(img)
    clean = recon_sos(k, version=m_t)
    clean.slice_id = slice_id or clean.slice_id
    versions.append(clean)
    return versions


def make_version_set(phantom: Phantom, maps: CoilMaps, m_t: int, snr_low_db: float,
                     snr_high_db: float, seed: int, etl: int = 8, slice_id: str = "") -> list:
    """Encode a phantom and produce its graded noise version set."""
    k = forward_kspace(phantom, maps, etl=etl)
    k.slice_id = slice_id
    return version_set_from_kspace(k, m_t, snr_low_db, snr_high_db, seed, slice_id=slice_id)
