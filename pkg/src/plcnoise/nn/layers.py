"""Differentiable layers on (batch, length, channels) arrays.

Only the layer set the trace GAN needs: 1-D convolution (cross-correlation
semantics, no kernel flip), dense, batch normalization, the three
activations, nearest/linear/hybrid upsampling, and inverted dropout. Every
backward pass is hand-derived and checked against central finite
differences in the test suite.

Parameter-carrying layers hold their arrays as attributes, stash what the
backward pass needs in ``self._cache`` during forward, and write parameter
gradients into ``self.grads`` (a dict mirroring ``self.params``) during
backward. Kernels never read global mutable state; given (params, input)
they are pure.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateBatchError, ModeError, ShapeError
from ..rng import Rng

__all__ = [
    "Conv1d",
    "Dense",
    "BatchNorm1d",
    "Activation",
    "Dropout",
    "upsample",
    "upsample_backward",
    "glorot_uniform",
]


def _check3(x: np.ndarray, what: str = "input") -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 3:
        raise ShapeError(f"{what} must be (batch, length, channels), got shape {x.shape}")
    return x


def glorot_uniform(shape: tuple[int, ...], fan_in: int, fan_out: int,
                   rng: Rng, dtype=np.float32) -> np.ndarray:
    """Uniform init in +-sqrt(6 / (fan_in + fan_out))."""
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    flat = rng.uniform(int(np.prod(shape)), -bound, bound)
    return flat.reshape(shape).astype(dtype)


class Conv1d:
    """1-D convolution, cross-correlation semantics (no kernel flip).

    kernel: (k_len, in_ch, out_ch); padding: (left, right) zeros.
    out_length = floor((length + pad_l + pad_r - k_len) / stride) + 1.
    """

    def __init__(self, kernel: np.ndarray, bias: np.ndarray, stride: int,
                 padding: tuple[int, int]):
        kernel = np.asarray(kernel)
        bias = np.asarray(bias)
        if kernel.ndim != 3:
            raise ShapeError("kernel must be (k_len, in_ch, out_ch)")
        if bias.shape != (kernel.shape[2],):
            raise ShapeError("bias must be (out_ch,)")
        if stride not in (1, 4):
            raise ShapeError(f"stride must be 1 or 4, got {stride}")
        self.kernel = kernel
        self.bias = bias
        self.stride = int(stride)
        self.padding = (int(padding[0]), int(padding[1]))
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    @classmethod
    def init(cls, k_len: int, in_ch: int, out_ch: int, stride: int,
             padding: tuple[int, int], rng: Rng, dtype=np.float32) -> "Conv1d":
        kernel = glorot_uniform((k_len, in_ch, out_ch),
                                fan_in=k_len * in_ch, fan_out=k_len * out_ch,
                                rng=rng, dtype=dtype)
        bias = np.zeros(out_ch, dtype=dtype)
        return cls(kernel, bias, stride, padding)

    @property
    def params(self) -> dict[str, np.ndarray]:
        return {"kernel": self.kernel, "bias": self.bias}

    def _out_len(self, padded_len: int) -> int:
        return (padded_len - self.kernel.shape[0]) // self.stride + 1

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = _check3(x)
        k, cin, cout = self.kernel.shape
        if x.shape[2] != cin:
            raise ShapeError(f"input has {x.shape[2]} channels, kernel expects {cin}")
        pl, pr = self.padding
        padded_len = x.shape[1] + pl + pr
        if padded_len < k:
            raise ShapeError(f"padded length {padded_len} shorter than kernel {k}")
        xp = np.pad(x, ((0, 0), (pl, pr), (0, 0)))
        lout = self._out_len(padded_len)
        span = (lout - 1) * self.stride + 1
        # one batched GEMM per kernel tap; avoids an im2col copy
        y = np.empty((x.shape[0], lout, cout), dtype=np.result_type(x, self.kernel))
        y[:] = self.bias
        for j in range(k):
            y += xp[:, j : j + span : self.stride] @ self.kernel[j]
        self._cache = xp
        return y

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        """Gradients of sum(grad_out * forward(x)); returns grad wrt x."""
        xp = self._cache
        grad_out = np.asarray(grad_out)
        k, cin, cout = self.kernel.shape
        lout = self._out_len(xp.shape[1])
        if grad_out.shape != (xp.shape[0], lout, cout):
            raise ShapeError("grad_out shape inconsistent with forward output")
        span = (lout - 1) * self.stride + 1

        self.grads["bias"] = grad_out.sum(axis=(0, 1)).astype(self.bias.dtype)
        gk = np.empty_like(self.kernel)
        gxp = np.zeros_like(xp)
        for j in range(k):
            xs = xp[:, j : j + span : self.stride]
            gk[j] = np.tensordot(xs, grad_out, axes=([0, 1], [0, 1]))
            gxp[:, j : j + span : self.stride] += grad_out @ self.kernel[j].T
        self.grads["kernel"] = gk
        pl, pr = self.padding
        lp = xp.shape[1]
        return gxp[:, pl : lp - pr if pr else lp]


class Dense:
    """Affine map y = x W + b on (batch, in_dim) arrays."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray):
        weights = np.asarray(weights)
        bias = np.asarray(bias)
        if weights.ndim != 2 or bias.shape != (weights.shape[1],):
            raise ShapeError("weights must be (in_dim, out_dim), bias (out_dim,)")
        self.weights = weights
        self.bias = bias
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    @classmethod
    def init(cls, in_dim: int, out_dim: int, rng: Rng, dtype=np.float32) -> "Dense":
        w = glorot_uniform((in_dim, out_dim), in_dim, out_dim, rng, dtype)
        return cls(w, np.zeros(out_dim, dtype=dtype))

    @property
    def params(self) -> dict[str, np.ndarray]:
        return {"weights": self.weights, "bias": self.bias}

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim != 2 or x.shape[1] != self.weights.shape[0]:
            raise ShapeError(
                f"input must be (batch, {self.weights.shape[0]}), got {x.shape}"
            )
        self._cache = x
        return x @ self.weights + self.bias

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        x = self._cache
        grad_out = np.asarray(grad_out)
        if grad_out.shape != (x.shape[0], self.weights.shape[1]):
            raise ShapeError("grad_out shape inconsistent with forward output")
        self.grads["weights"] = (x.T @ grad_out).astype(self.weights.dtype)
        self.grads["bias"] = grad_out.sum(axis=0).astype(self.bias.dtype)
        return grad_out @ self.weights.T


class BatchNorm1d:
    """Per-channel batch normalization over the (batch, length) axes.

    Training mode normalizes by biased batch statistics and updates the
    running estimates with the given momentum; inference mode uses the
    running estimates. Training requires batch >= 2.
    """

    def __init__(self, channels: int, eps: float = 1e-5, momentum: float = 0.1,
                 dtype=np.float32):
        self.gamma = np.ones(channels, dtype=dtype)
        self.beta = np.zeros(channels, dtype=dtype)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self.eps = float(eps)
        self.momentum = float(momentum)
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    @property
    def params(self) -> dict[str, np.ndarray]:
        return {"gamma": self.gamma, "beta": self.beta}

    @property
    def state(self) -> dict[str, np.ndarray]:
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        x = _check3(x)
        if x.shape[2] != self.gamma.shape[0]:
            raise ShapeError(f"expected {self.gamma.shape[0]} channels, got {x.shape[2]}")
        if training:
            if x.shape[0] < 2:
                raise DegenerateBatchError("training-mode batch norm needs batch >= 2")
            mean = x.mean(axis=(0, 1))
            var = x.var(axis=(0, 1))
            m = self.momentum
            self.running_mean[:] = (1 - m) * self.running_mean + m * mean
            self.running_var[:] = (1 - m) * self.running_var + m * var
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv_std
        self._cache = (xhat, inv_std.astype(x.dtype), training)
        return self.gamma * xhat + self.beta

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        xhat, inv_std, training = self._cache
        grad_out = np.asarray(grad_out)
        if grad_out.shape != xhat.shape:
            raise ShapeError("grad_out shape inconsistent with forward output")
        self.grads["gamma"] = (grad_out * xhat).sum(axis=(0, 1)).astype(self.gamma.dtype)
        self.grads["beta"] = grad_out.sum(axis=(0, 1)).astype(self.beta.dtype)
        dxhat = grad_out * self.gamma
        if not training:
            return dxhat * inv_std
        n = xhat.shape[0] * xhat.shape[1]
        s1 = dxhat.sum(axis=(0, 1))
        s2 = (dxhat * xhat).sum(axis=(0, 1))
        return (inv_std / n) * (n * dxhat - s1 - xhat * s2)


class Activation:
    """Elementwise relu / leaky_relu / tanh with derivative backward.

    The subgradient at 0 for (leaky) relu is the negative-side slope.
    """

    KINDS = ("relu", "leaky_relu", "tanh")

    def __init__(self, kind: str, slope: float = 0.2):
        if kind not in self.KINDS:
            raise ModeError(f"unknown activation {kind!r}; one of {self.KINDS}")
        self.kind = kind
        self.slope = float(slope)
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if self.kind == "tanh":
            y = np.tanh(x)
            self._cache = y
            return y
        slope = 0.0 if self.kind == "relu" else self.slope
        self._cache = np.where(x > 0, x.dtype.type(1), x.dtype.type(slope))
        return np.where(x > 0, x, slope * x)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self.kind == "tanh":
            y = self._cache
            return grad_out * (1 - y * y)
        return grad_out * self._cache


class Dropout:
    """Inverted dropout: scales kept units by 1/(1-rate) at train time."""

    def __init__(self, rate: float):
        if not 0 <= rate < 1:
            raise ShapeError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = float(rate)
        self._cache = None

    def forward(self, x: np.ndarray, training: bool, rng: Rng | None = None) -> np.ndarray:
        if not training or self.rate == 0.0:
            self._cache = None
            return x
        if rng is None:
            raise ShapeError("training-mode dropout needs an rng")
        keep = 1.0 - self.rate
        mask = (rng.uniform(x.size, 0.0, 1.0).reshape(x.shape) < keep)
        mask = mask.astype(x.dtype) / x.dtype.type(keep)
        self._cache = mask
        return x * mask

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._cache is None:
            return grad_out
        return grad_out * self._cache


_MODES = ("nearest", "linear", "hybrid")


def upsample(x: np.ndarray, factor: int = 4, mode: str = "hybrid") -> np.ndarray:
    """Upsample the length axis by ``factor``.

    nearest repeats each input; linear interpolates toward the next input
    with the last input clamped (x[len] == x[len-1]); hybrid is the
    arithmetic mean of the two. The backward pass (`upsample_backward`) is
    the exact transpose of the chosen linear map.
    """
    x = _check3(x)
    if mode not in _MODES:
        raise ModeError(f"unknown upsample mode {mode!r}; one of {_MODES}")
    if factor < 1:
        raise ShapeError("factor must be >= 1")
    if mode in ("linear", "hybrid") and x.shape[1] < 2:
        raise ShapeError("linear/hybrid upsampling needs length >= 2")
    b, l, c = x.shape
    if mode == "nearest":
        return np.repeat(x, factor, axis=1)
    frac = (np.arange(factor, dtype=x.dtype) / factor)[None, None, :, None]
    x_next = np.concatenate([x[:, 1:], x[:, -1:]], axis=1)
    lin = x[:, :, None, :] * (1 - frac) + x_next[:, :, None, :] * frac
    lin = lin.reshape(b, l * factor, c)
    if mode == "linear":
        return lin
    return 0.5 * (np.repeat(x, factor, axis=1) + lin)


def upsample_backward(grad_out: np.ndarray, factor: int = 4,
                      mode: str = "hybrid") -> np.ndarray:
    """Exact adjoint of `upsample` applied to ``grad_out``."""
    grad_out = _check3(grad_out, "grad_out")
    if mode not in _MODES:
        raise ModeError(f"unknown upsample mode {mode!r}; one of {_MODES}")
    b, lf, c = grad_out.shape
    if lf % factor:
        raise ShapeError(f"grad length {lf} not a multiple of factor {factor}")
    l = lf // factor
    g4 = grad_out.reshape(b, l, factor, c)
    if mode == "nearest":
        return g4.sum(axis=2)
    frac = np.arange(factor, dtype=grad_out.dtype) / factor
    own = np.einsum("blfc,f->blc", g4, 1 - frac)
    nxt = np.einsum("blfc,f->blc", g4, frac)
    gx = own
    gx[:, 1:] += nxt[:, :-1]
    gx[:, -1] += nxt[:, -1]  # clamp: the virtual x[len] is x[len-1]
    if mode == "linear":
        return gx
    return 0.5 * (g4.sum(axis=2) + gx)
