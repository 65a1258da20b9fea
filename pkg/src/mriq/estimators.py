"""Baseline quality scores used to seed training labels.

Two deterministic estimators, both returning "higher is cleaner" dB-like
values:

* a reference-based SNR over a graded version set, where the clean version
  scores the linear extrapolation of its two noisiest-but-one neighbours
  (it has no finite self-referenced SNR), and
* a no-reference block-DCT noise estimator: the median absolute deviation
  of high-frequency DCT coefficients pooled over the smoothest half of the
  8x8 blocks, scaled by the Gaussian consistency factor 1.4826.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.fft

from .errors import DegenerateInputError
from .kspace import snr_db
from .phantom import MagnitudeImage


class Method(str, Enum):
    SNR = "snr"
    BLOCK_DCT = "block_dct"


@dataclass
class HeuristicScore:
    value: float
    method: Method
    slice_id: str = ""
    version: int | None = None

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("heuristic score must be finite")


def snr_heuristic(versions: list) -> list:
    """Reference-based SNR scores for a version set ordered v=1..m_t.

    Versions v < m_t are scored against the clean version m_t; the clean
    version gets Q[m_t-1] + (Q[m_t-1] - Q[m_t-2]), continuing the ladder.
    """
    m_t = len(versions)
    if m_t < 3:
        raise ValueError(f"version set must have >= 3 versions, got {m_t}")
    shapes = {v.pixels.shape for v in versions}
    if len(shapes) != 1:
        raise ValueError(f"version images disagree in shape: {shapes}")
    ref = versions[-1]
    scores = [snr_db(ref.pixels, versions[v].pixels) for v in range(m_t - 1)]
    scores.append(scores[-1] + (scores[-1] - scores[-2]))
    return [HeuristicScore(value=float(q), method=Method.SNR,
                           slice_id=versions[v].slice_id, version=v + 1)
            for v, q in enumerate(scores)]


# 8x8 block-DCT frequency masks: u+v in [1, 4] carries structure ("texture"),
# u+v >= 8 is almost pure noise in smooth blocks.
_BLOCK = 8
_UV = np.add.outer(np.arange(_BLOCK), np.arange(_BLOCK))
_TEXTURE_MASK = (_UV >= 1) & (_UV <= 4)
_POOL_MASK = _UV >= 8


def block_dct_sigma(img: MagnitudeImage) -> float:
    """Noise standard deviation estimate from high-frequency block DCTs.

    Tiles the image into non-overlapping 8x8 blocks (trailing partial rows
    and columns are dropped), ranks blocks by low-frequency texture energy,
    keeps the smoothest half, and applies a MAD estimator to the pooled
    u+v >= 8 coefficients of an orthonormal DCT-II.
    """
    pixels = img.pixels
    h, w = pixels.shape
    if h < 16 or w < 16:
        raise ValueError(f"image must be at least 16x16, got {h}x{w}")
    nby, nbx = h // _BLOCK, w // _BLOCK
    blocks = pixels[: nby * _BLOCK, : nbx * _BLOCK]
    blocks = blocks.reshape(nby, _BLOCK, nbx, _BLOCK).transpose(0, 2, 1, 3).reshape(-1, _BLOCK, _BLOCK)
    coeffs = scipy.fft.dctn(blocks, axes=(1, 2), norm="ortho")
    texture = np.sum(np.abs(coeffs[:, _TEXTURE_MASK]), axis=1)
    keep = max(1, len(blocks) // 2)
    smooth = np.argsort(texture, kind="stable")[:keep]
    pooled = np.abs(coeffs[smooth][:, _POOL_MASK]).ravel()
    return float(1.4826 * np.median(pooled))


def block_dct_heuristic(img: MagnitudeImage) -> HeuristicScore:
    """Map the sigma estimate to a higher-is-cleaner dB score."""
    sigma = block_dct_sigma(img)
    value = -10.0 * math.log10(max(sigma**2, 1e-8))
    return HeuristicScore(value=value, method=Method.BLOCK_DCT,
                          slice_id=img.slice_id, version=img.version)


def score_version_set(versions: list, method: Method) -> list:
    """Heuristic scores for a whole version set with one method."""
    if method == Method.SNR:
        return snr_heuristic(versions)
    if method == Method.BLOCK_DCT:
        return [block_dct_heuristic(v) for v in versions]
    raise ValueError(f"unknown heuristic method: {method}")
