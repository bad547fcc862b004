"""Adaptive-moment optimizer with L2 regularization and weight clipping."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError

__all__ = ["Adam"]


class Adam:
    """Adam with bias correction, updating parameter arrays in place.

    weight_decay adds ``weight_decay * param`` to the gradient before the
    moment updates (classic L2). If ``clip_value`` is set, every parameter
    is clamped to [-clip_value, clip_value] after the step -- the
    Wasserstein critic constraint.
    """

    def __init__(self, params: dict[str, np.ndarray], lr: float = 1e-4,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0, clip_value: float | None = None):
        if lr <= 0:
            raise ShapeError("lr must be > 0")
        if weight_decay < 0:
            raise ShapeError("weight_decay must be >= 0")
        if clip_value is not None and clip_value <= 0:
            raise ShapeError("clip_value must be > 0 when set")
        self.params = params
        self.lr = float(lr)
        self.betas = (float(betas[0]), float(betas[1]))
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.clip_value = clip_value
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        if set(grads) != set(self.params):
            missing = set(self.params) ^ set(grads)
            raise ShapeError(f"grads/params key mismatch: {sorted(missing)}")
        self.t += 1
        b1, b2 = self.betas
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t
        for name, p in self.params.items():
            g = grads[name]
            if g.shape != p.shape:
                raise ShapeError(f"grad shape {g.shape} != param shape {p.shape} ({name})")
            if self.weight_decay:
                g = g + self.weight_decay * p
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * np.square(g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.clip_value is not None:
                np.clip(p, -self.clip_value, self.clip_value, out=p)

    def state_blobs(self, prefix: str) -> dict[str, np.ndarray]:
        """Flatten optimizer state into named arrays for checkpointing."""
        out = {f"{prefix}.t": np.array(self.t, dtype=np.int64)}
        for k in self.params:
            out[f"{prefix}.m.{k}"] = self.m[k]
            out[f"{prefix}.v.{k}"] = self.v[k]
        return out

    def load_state_blobs(self, prefix: str, blobs: dict[str, np.ndarray]) -> None:
        self.t = int(blobs[f"{prefix}.t"])
        for k in self.params:
            self.m[k] = blobs[f"{prefix}.m.{k}"].astype(self.m[k].dtype).reshape(self.m[k].shape)
            self.v[k] = blobs[f"{prefix}.v.{k}"].astype(self.v[k].dtype).reshape(self.v[k].shape)
