"""Divisive normalization: forward transform and exact analytic gradients.

For a C-channel feature map, each spatial location is transformed as

    a_j = z_j / (beta_j + sum_k gamma_jk * z_k^2) ** 0.5

with trainable per-channel offsets beta (kept >= BETA_MIN) and a trainable
non-negative C x C mixing matrix gamma, both shared across spatial
positions.  Everything reduces to channel-space matmuls, so no jitted
kernel is needed here.
"""

import numpy as np

BETA_MIN = 1e-6


def dn_forward(z: np.ndarray, beta: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Apply divisive normalization to an (N, C, H, W) feature map."""
    den = dn_denominator(z, beta, gamma)
    return z / np.sqrt(den)


def dn_denominator(z: np.ndarray, beta: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    zsq = z * z
    den = np.einsum("jk,nkhw->njhw", gamma, zsq, optimize=True)
    den += beta.reshape(1, -1, 1, 1)
    return den


def dn_backward(grad_out: np.ndarray, z: np.ndarray, beta: np.ndarray,
                gamma: np.ndarray) -> tuple:
    """Gradients of the DN output w.r.t. its input and parameters.

    Returns (dz, dbeta, dgamma) for upstream gradient ``grad_out``.  With
    D_j = beta_j + sum_k gamma_jk z_k^2 and t_j = g_j z_j D_j^{-3/2}:

        dz_l    = g_l D_l^{-1/2} - z_l * sum_j gamma_jl t_j
        dbeta_j = -0.5 * sum t_j
        dgamma_jk = -0.5 * sum t_j z_k^2
    """
    den = dn_denominator(z, beta, gamma)
    inv_sqrt = 1.0 / np.sqrt(den)
    t = grad_out * z * inv_sqrt / den  # g * z * D^{-3/2}
    dz = grad_out * inv_sqrt - z * np.einsum("jk,njhw->nkhw", gamma, t, optimize=True)
    dbeta = -0.5 * t.sum(axis=(0, 2, 3))
    dgamma = -0.5 * np.einsum("njhw,nkhw->jk", t, z * z, optimize=True)
    return dz, dbeta, dgamma
