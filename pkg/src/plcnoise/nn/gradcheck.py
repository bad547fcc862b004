"""Finite-difference gradient checking for the layer kernels.

Central differences at h = 1e-4 in 64-bit. Errors are reported as
max |analytic - numeric| normalized by max(||analytic||_inf,
||numeric||_inf, 1e-8) per checked array, so dead units (true zero
gradients) do not inflate the score with finite-difference noise.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..rng import Rng
from . import layers as L

__all__ = ["numeric_gradient", "max_rel_error", "gradcheck_layer"]


def numeric_gradient(f: Callable[[], float], x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of scalar f() wrt array x (mutated in place)."""
    g = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * h)
    return g


def max_rel_error(f: Callable[[], float], arrays: list[np.ndarray],
                  analytic: list[np.ndarray], h: float = 1e-4) -> float:
    """Worst normalized deviation between analytic grads and central differences.

    Each array is normalized by its own gradient magnitude, floored at
    1e-6 of the largest gradient across all checked arrays: blocks whose
    true gradient is exactly zero (e.g. a conv bias feeding batch norm)
    would otherwise compare finite-difference dust against nothing.
    """
    numeric = [numeric_gradient(f, x, h) for x in arrays]
    global_scale = max(
        (max(np.max(np.abs(a)), np.max(np.abs(n)))
         for a, n in zip(analytic, numeric)),
        default=0.0,
    )
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = max(np.max(np.abs(a)), np.max(np.abs(n)),
                    1e-6 * global_scale, 1e-8)
        worst = max(worst, float(np.max(np.abs(a - n)) / denom))
    return worst


def _loss_weights(rng: Rng, shape: tuple[int, ...]) -> np.ndarray:
    return rng.uniform(int(np.prod(shape)), -1.0, 1.0).reshape(shape)


def gradcheck_layer(kind: str, rng: Rng, h: float = 1e-4) -> float:
    """Build a random small case for ``kind`` and return its max error.

    The loss is sum(w * forward(x)) for fixed random weights w, checked for
    the input and for every parameter of the layer. Supported kinds:
    conv1d, conv1d_s4, dense, batchnorm, relu, leaky_relu, tanh, upsample,
    dense_tanh_dense.
    """
    if kind in ("conv1d", "conv1d_s4"):
        stride = 4 if kind == "conv1d_s4" else 1
        b, l, cin, cout, k = 2, 12, 2, 3, 3
        if stride == 4:
            l = 16
        layer = Conv = L.Conv1d.init(k, cin, cout, stride,
                                     (1, 1) if stride == 1 else (0, 3),
                                     rng, dtype=np.float64)
        x = _loss_weights(rng, (b, l, cin))
        w = _loss_weights(rng, layer.forward(x).shape)

        def f():
            return float(np.sum(w * Conv.forward(x)))

        f()
        gx = Conv.backward(w)
        return max_rel_error(f, [x, Conv.kernel, Conv.bias],
                             [gx, Conv.grads["kernel"], Conv.grads["bias"]], h)

    if kind == "dense":
        layer = L.Dense.init(3, 2, rng, dtype=np.float64)
        x = _loss_weights(rng, (4, 3))
        w = _loss_weights(rng, (4, 2))

        def f():
            return float(np.sum(w * layer.forward(x)))

        f()
        gx = layer.backward(w)
        return max_rel_error(f, [x, layer.weights, layer.bias],
                             [gx, layer.grads["weights"], layer.grads["bias"]], h)

    if kind == "batchnorm":
        layer = L.BatchNorm1d(2, dtype=np.float64)
        layer.gamma[:] = _loss_weights(rng, (2,)) + 1.5
        layer.beta[:] = _loss_weights(rng, (2,))
        x = _loss_weights(rng, (4, 6, 2))
        w = _loss_weights(rng, (4, 6, 2))

        def f():
            return float(np.sum(w * layer.forward(x, training=True)))

        f()
        gx = layer.backward(w)
        return max_rel_error(f, [x, layer.gamma, layer.beta],
                             [gx, layer.grads["gamma"], layer.grads["beta"]], h)

    if kind in ("relu", "leaky_relu", "tanh"):
        act = L.Activation(kind)
        x = _loss_weights(rng, (3, 8, 2))
        x = np.where(np.abs(x) < 0.05, 0.2, x)  # keep away from the relu kink
        w = _loss_weights(rng, x.shape)

        def f():
            return float(np.sum(w * act.forward(x)))

        f()
        gx = act.backward(w)
        return max_rel_error(f, [x], [gx], h)

    if kind == "upsample":
        worst = 0.0
        for mode in ("nearest", "linear", "hybrid"):
            x = _loss_weights(rng, (2, 5, 2))
            w = _loss_weights(rng, (2, 20, 2))

            def f(mode=mode, x=x, w=w):
                return float(np.sum(w * L.upsample(x, 4, mode)))

            gx = L.upsample_backward(w, 4, mode)
            worst = max(worst, max_rel_error(f, [x], [gx], h))
        return worst

    if kind == "dense_tanh_dense":
        d1 = L.Dense.init(3, 5, rng, dtype=np.float64)
        act = L.Activation("tanh")
        d2 = L.Dense.init(5, 2, rng, dtype=np.float64)
        x = _loss_weights(rng, (4, 3))
        w = _loss_weights(rng, (4, 2))

        def f():
            return float(np.sum(w * d2.forward(act.forward(d1.forward(x)))))

        f()
        gx = d1.backward(act.backward(d2.backward(w)))
        arrays = [x, d1.weights, d1.bias, d2.weights, d2.bias]
        grads = [gx, d1.grads["weights"], d1.grads["bias"],
                 d2.grads["weights"], d2.grads["bias"]]
        return max_rel_error(f, arrays, grads, h)

    raise ValueError(f"unknown layer kind {kind!r}")
