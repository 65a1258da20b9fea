"""Convolution kernels: a BLAS-backed numpy path and numba-jitted loops.

The active path is chosen once at import time from the ``MRIQ_KERNELS``
environment variable ("numpy" or "numba").  Both paths implement the same
strided, zero-padded cross-correlation contract and agree to float
rounding; ``benchmarks/bench_kernels.py`` compares their speed.  The
default is the numpy im2col+GEMM path, which wins on machines with few
cores because the work lands in multithreaded BLAS; the jitted direct
loops avoid the column-matrix materialization and can win when memory is
tight or BLAS is weak.

Layout is NCHW throughout; weights are (out_ch, in_ch, kh, kw).
"""

import os

import numpy as np

try:
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
    _HAVE_NUMBA = False

_choice = os.environ.get("MRIQ_KERNELS", "").strip().lower()
if _choice not in ("", "numba", "numpy"):
    raise ValueError(f"MRIQ_KERNELS must be 'numba' or 'numpy', got {_choice!r}")
if _choice == "numba" and not _HAVE_NUMBA:
    raise RuntimeError("MRIQ_KERNELS=numba but numba is not importable")
USE_NUMBA = _choice == "numba"


def active_path() -> str:
    return "numba" if USE_NUMBA else "numpy"


def _out_hw(h: int, w: int, kh: int, kw: int, stride: int, pad: int) -> tuple:
    return (h + 2 * pad - kh) // stride + 1, (w + 2 * pad - kw) // stride + 1


def _pad(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


# ---------------------------------------------------------------- numpy path
# im2col + batched BLAS matmul; the column matrix for a 10-image batch is a
# few MB, well worth the GEMM throughput.

def _im2col(xp, kh, kw, stride, oh, ow):
    n, cin = xp.shape[0], xp.shape[1]
    cols = np.empty((n, cin, kh, kw, oh, ow), dtype=xp.dtype)
    for u in range(kh):
        for v in range(kw):
            cols[:, :, u, v] = xp[:, :, u : u + oh * stride : stride, v : v + ow * stride : stride]
    return cols.reshape(n, cin * kh * kw, oh * ow)


def _forward_np(x, w, b, stride, pad):
    n = x.shape[0]
    cout, _, kh, kw = w.shape
    oh, ow = _out_hw(x.shape[2], x.shape[3], kh, kw, stride, pad)
    cols = _im2col(_pad(x, pad), kh, kw, stride, oh, ow)
    out = w.reshape(cout, -1) @ cols
    return out.reshape(n, cout, oh, ow) + b.reshape(1, -1, 1, 1)


def _backward_input_np(dout, w, stride, pad, in_hw):
    n, cout, oh, ow = dout.shape
    _, cin, kh, kw = w.shape
    h, wd = in_hw
    dcols = w.reshape(cout, -1).T @ dout.reshape(n, cout, oh * ow)
    dcols = dcols.reshape(n, cin, kh, kw, oh, ow)
    dxp = np.zeros((n, cin, h + 2 * pad, wd + 2 * pad), dtype=dout.dtype)
    for u in range(kh):
        for v in range(kw):
            dxp[:, :, u : u + oh * stride : stride, v : v + ow * stride : stride] += dcols[:, :, u, v]
    if pad == 0:
        return dxp
    return dxp[:, :, pad:-pad, pad:-pad]


def _backward_weights_np(dout, x, kh, kw, stride, pad):
    n, cout, oh, ow = dout.shape
    oh2, ow2 = _out_hw(x.shape[2], x.shape[3], kh, kw, stride, pad)
    cols = _im2col(_pad(x, pad), kh, kw, stride, oh2, ow2)
    dw = np.einsum("nol,ncl->oc", dout.reshape(n, cout, oh * ow), cols, optimize=True)
    dw = dw.reshape(cout, x.shape[1], kh, kw)
    db = dout.sum(axis=(0, 2, 3))
    return dw, db


# ---------------------------------------------------------------- numba path

if _HAVE_NUMBA:

    @njit(parallel=True, fastmath=False, cache=True)
    def _forward_nb(xp, w, b, stride, out):
        n, cin = xp.shape[0], xp.shape[1]
        cout, kh, kw = w.shape[0], w.shape[2], w.shape[3]
        oh, ow = out.shape[2], out.shape[3]
        for idx in prange(n * cout):
            ni = idx // cout
            oc = idx % cout
            for y in range(oh):
                for xw in range(ow):
                    out[ni, oc, y, xw] = b[oc]
            for ic in range(cin):
                for u in range(kh):
                    for v in range(kw):
                        wv = w[oc, ic, u, v]
                        for y in range(oh):
                            iy = y * stride + u
                            for xw in range(ow):
                                out[ni, oc, y, xw] += wv * xp[ni, ic, iy, xw * stride + v]

    @njit(parallel=True, fastmath=False, cache=True)
    def _backward_input_nb(dout, w, stride, dxp):
        n, cout, oh, ow = dout.shape
        cin, kh, kw = w.shape[1], w.shape[2], w.shape[3]
        for idx in prange(n * cin):
            ni = idx // cin
            ic = idx % cin
            for oc in range(cout):
                for u in range(kh):
                    for v in range(kw):
                        wv = w[oc, ic, u, v]
                        for y in range(oh):
                            iy = y * stride + u
                            for xw in range(ow):
                                dxp[ni, ic, iy, xw * stride + v] += wv * dout[ni, oc, y, xw]

    @njit(parallel=True, fastmath=False, cache=True)
    def _backward_weights_nb(dout, xp, stride, dw):
        n, cout, oh, ow = dout.shape
        cin, kh, kw = dw.shape[1], dw.shape[2], dw.shape[3]
        for oc in prange(cout):
            for ic in range(cin):
                for u in range(kh):
                    for v in range(kw):
                        acc = 0.0
                        for ni in range(n):
                            for y in range(oh):
                                iy = y * stride + u
                                for xw in range(ow):
                                    acc += dout[ni, oc, y, xw] * xp[ni, ic, iy, xw * stride + v]
                        dw[oc, ic, u, v] = acc


# ------------------------------------------------------------------- facade

def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray,
                   stride: int = 1, pad: int = 0) -> np.ndarray:
    """Strided zero-padded cross-correlation of an NCHW batch."""
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ValueError(f"bad conv shapes: x {x.shape}, w {w.shape}")
    if not USE_NUMBA:
        return _forward_np(x, w, b, stride, pad)
    oh, ow = _out_hw(x.shape[2], x.shape[3], w.shape[2], w.shape[3], stride, pad)
    out = np.empty((x.shape[0], w.shape[0], oh, ow), dtype=x.dtype)
    _forward_nb(np.ascontiguousarray(_pad(x, pad)), w, b, stride, out)
    return out


def conv2d_backward_input(dout: np.ndarray, w: np.ndarray, stride: int, pad: int,
                          in_hw: tuple) -> np.ndarray:
    """Gradient w.r.t. the convolution input."""
    if not USE_NUMBA:
        return _backward_input_np(dout, w, stride, pad, in_hw)
    h, wd = in_hw
    dxp = np.zeros((dout.shape[0], w.shape[1], h + 2 * pad, wd + 2 * pad), dtype=dout.dtype)
    _backward_input_nb(np.ascontiguousarray(dout), w, stride, dxp)
    if pad == 0:
        return dxp
    return dxp[:, :, pad:-pad, pad:-pad]


def conv2d_backward_weights(dout: np.ndarray, x: np.ndarray, kh: int, kw: int,
                            stride: int, pad: int) -> tuple:
    """Gradients w.r.t. the convolution weights and bias."""
    if not USE_NUMBA:
        return _backward_weights_np(dout, x, kh, kw, stride, pad)
    dw = np.empty((dout.shape[1], x.shape[1], kh, kw), dtype=dout.dtype)
    _backward_weights_nb(np.ascontiguousarray(dout), np.ascontiguousarray(_pad(x, pad)), stride, dw)
    db = dout.sum(axis=(0, 2, 3))
    return dw, db
