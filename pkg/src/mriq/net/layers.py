"""Network building blocks with explicit forward/backward passes.

Each layer caches what its backward pass needs, exposes its trainable
tensors as ``Param`` objects, and applies its own box constraints after an
optimizer step via ``project()``.
"""

import numpy as np

from . import kernels
from .dn import BETA_MIN, dn_backward, dn_forward


class Param:
    """A trainable tensor with its accumulated gradient."""

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)

    def zero_grad(self):
        self.grad[:] = 0.0


class Layer:
    def params(self) -> list:
        return []

    def project(self):
        pass

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Conv2d(Layer):
    def __init__(self, name: str, in_ch: int, out_ch: int, kernel: int, stride: int,
                 pad: int, rng: np.random.Generator, dtype=np.float32):
        fan_in = in_ch * kernel * kernel
        bound = 1.0 / np.sqrt(fan_in)
        self.w = Param(f"{name}.w", rng.uniform(-bound, bound, (out_ch, in_ch, kernel, kernel)).astype(dtype))
        self.b = Param(f"{name}.b", np.zeros(out_ch, dtype=dtype))
        self.stride, self.pad, self.kernel = stride, pad, kernel
        self._x = None

    def params(self):
        return [self.w, self.b]

    def forward(self, x, train):
        self._x = x
        return kernels.conv2d_forward(x, self.w.value, self.b.value, self.stride, self.pad)

    def backward(self, grad):
        dw, db = kernels.conv2d_backward_weights(grad, self._x, self.kernel, self.kernel,
                                                 self.stride, self.pad)
        self.w.grad += dw
        self.b.grad += db
        return kernels.conv2d_backward_input(grad, self.w.value, self.stride, self.pad,
                                             self._x.shape[2:])


class DivisiveNorm(Layer):
    def __init__(self, name: str, channels: int, dtype=np.float32):
        self.beta = Param(f"{name}.beta", np.ones(channels, dtype=dtype))
        self.gamma = Param(f"{name}.gamma", (0.1 * np.eye(channels)).astype(dtype))
        self._z = None

    def params(self):
        return [self.beta, self.gamma]

    def project(self):
        np.maximum(self.beta.value, BETA_MIN, out=self.beta.value)
        np.maximum(self.gamma.value, 0.0, out=self.gamma.value)

    def forward(self, z, train):
        self._z = z
        return dn_forward(z, self.beta.value, self.gamma.value)

    def backward(self, grad):
        dz, dbeta, dgamma = dn_backward(grad, self._z, self.beta.value, self.gamma.value)
        self.beta.grad += dbeta
        self.gamma.grad += dgamma
        return dz


class BatchNorm2d(Layer):
    def __init__(self, name: str, channels: int, momentum: float = 0.1,
                 eps: float = 1e-5, dtype=np.float32):
        self.gamma = Param(f"{name}.gamma", np.ones(channels, dtype=dtype))
        self.beta = Param(f"{name}.beta", np.zeros(channels, dtype=dtype))
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self.momentum, self.eps = momentum, eps
        self._cache = None

    def params(self):
        return [self.gamma, self.beta]

    def forward(self, x, train):
        if train:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            self.running_mean = ((1 - self.momentum) * self.running_mean + self.momentum * mean).astype(x.dtype)
            self.running_var = ((1 - self.momentum) * self.running_var + self.momentum * var).astype(x.dtype)
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean.reshape(1, -1, 1, 1)) * inv_std.reshape(1, -1, 1, 1)
        if train:
            self._cache = (xhat, inv_std, x.shape)
        return self.gamma.value.reshape(1, -1, 1, 1) * xhat + self.beta.value.reshape(1, -1, 1, 1)

    def backward(self, grad):
        xhat, inv_std, shape = self._cache
        m = shape[0] * shape[2] * shape[3]
        self.gamma.grad += np.sum(grad * xhat, axis=(0, 2, 3))
        self.beta.grad += np.sum(grad, axis=(0, 2, 3))
        g = grad * self.gamma.value.reshape(1, -1, 1, 1)
        gsum = g.sum(axis=(0, 2, 3), keepdims=True)
        gx = (g * xhat).sum(axis=(0, 2, 3), keepdims=True)
        return inv_std.reshape(1, -1, 1, 1) * (g - gsum / m - xhat * gx / m)


class ReLU(Layer):
    def forward(self, x, train):
        self._mask = x > 0
        return x * self._mask

    def backward(self, grad):
        return grad * self._mask


class GlobalAvgPool(Layer):
    """(N, C, H, W) -> (N, C)."""

    def forward(self, x, train):
        self._shape = x.shape
        return x.mean(axis=(2, 3))

    def backward(self, grad):
        n, c, h, w = self._shape
        return np.broadcast_to(grad[:, :, None, None], self._shape).copy() / (h * w)


class Dense(Layer):
    def __init__(self, name: str, in_dim: int, out_dim: int, rng: np.random.Generator,
                 dtype=np.float32):
        bound = 1.0 / np.sqrt(in_dim)
        self.w = Param(f"{name}.w", rng.uniform(-bound, bound, (in_dim, out_dim)).astype(dtype))
        self.b = Param(f"{name}.b", np.zeros(out_dim, dtype=dtype))

    def params(self):
        return [self.w, self.b]

    def forward(self, x, train):
        self._x = x
        return x @ self.w.value + self.b.value

    def backward(self, grad):
        self.w.grad += self._x.T @ grad
        self.b.grad += grad.sum(axis=0)
        return grad @ self.w.value.T


def run_forward(layers: list, x: np.ndarray, train: bool) -> np.ndarray:
    for layer in layers:
        x = layer.forward(x, train)
    return x


def run_backward(layers: list, grad: np.ndarray) -> np.ndarray:
    for layer in reversed(layers):
        grad = layer.backward(grad)
    return grad
