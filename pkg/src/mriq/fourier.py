"""Centered, orthonormal 2D Fourier transforms.

MRI k-space puts the zero frequency at the center of the grid while
``numpy.fft`` puts it in the corner, so every transform is wrapped in the
usual ifftshift/fftshift sandwich.  The ``ortho`` normalization makes the
pair unitary: energy is preserved exactly and round trips are lossless up
to floating-point rounding.
"""

import numpy as np


def fft2c(image: np.ndarray) -> np.ndarray:
    """Image -> centered k-space (unitary)."""
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(image, axes=(-2, -1)), norm="ortho"), axes=(-2, -1))


def ifft2c(kspace: np.ndarray) -> np.ndarray:
    """Centered k-space -> image (unitary)."""
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(kspace, axes=(-2, -1)), norm="ortho"), axes=(-2, -1))
