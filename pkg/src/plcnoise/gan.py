"""1-D convolutional Wasserstein GAN for fixed-length noise traces.

Generator: dense latent -> (base_len, base_ch), then ``blocks`` repetitions
of [upsample x4 -> conv k25 s1 -> batch norm -> ReLU], with the final block
ending in tanh instead (no batch norm there), so outputs live in (-1, 1)
and the length grows 4x per block to base_len * 4**blocks.

Critic: ``blocks`` repetitions of [conv k25 s4 -> leaky ReLU 0.2 ->
dropout], shrinking the length 4x per block while doubling channels up to
base_ch, then flatten (base_len * base_ch) -> dense -> one unclamped scalar
per trace (no output nonlinearity).

Training minimizes the Wasserstein surrogate: the critic is updated
``critic_steps_per_gen`` times per generator update and its weights are
clamped to [-clip_value, clip_value] after every optimizer step. All
randomness is drawn from named substreams of one seed, so single-threaded
runs are bitwise reproducible.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import nn
from .errors import (
    ConfigError,
    InvalidParamError,
    NumericsError,
    ShapeError,
)
from .features import feature_matrix8, fid, standardize
from .rng import Rng
from .traces import TraceSet

__all__ = [
    "GanConfig",
    "Generator",
    "Critic",
    "GanModel",
    "TrainHistory",
    "build_model",
    "critic_loss",
    "generator_loss",
    "train",
    "generate",
    "save_model",
    "load_model",
    "desk_config",
    "holdout_fid",
]

# substream indices reserved for the phases of a run
_S_G_INIT, _S_C_INIT = 1, 2
_S_SHUFFLE, _S_LATENT, _S_DROPOUT, _S_SPLIT, _S_EVAL = 11, 12, 13, 14, 15


@dataclass(frozen=True)
class GanConfig:
    """Architecture and training hyperparameters.

    trace_len is derived as base_len * 4**blocks. Defaults give the
    full-scale architecture (16384-sample traces); ``desk_config`` is the
    reduced setup used by the test suite. batch defaults to 64 (the
    training-time figure; the complexity study elsewhere quotes 32).
    """

    latent_dim: int = 100
    base_len: int = 16
    base_ch: int = 1024
    blocks: int = 5
    kernel_len: int = 25
    leaky_slope: float = 0.2
    lr: float = 1e-4
    epochs: int = 200
    batch: int = 64
    critic_steps_per_gen: int = 5
    clip_value: float = 0.01
    l2: float = 0.0
    dropout: float = 0.3
    early_stop_patience: int = 20
    eval_every: int = 5
    upsample_mode: str = "hybrid"
    sample_rate_hz: float = 400e3
    holdout_frac: float = 0.1

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ConfigError("latent_dim must be >= 1")
        if self.batch < 2:
            raise ConfigError("batch must be >= 2")
        if self.blocks < 1:
            raise ConfigError("blocks must be >= 1")
        if self.base_ch % (1 << (self.blocks - 1)) or self.base_ch < (1 << self.blocks):
            raise ConfigError(
                f"base_ch {self.base_ch} not divisible into {self.blocks} halving blocks"
            )
        if self.kernel_len < 4:
            raise ConfigError("kernel_len must be >= 4 for the stride-4 padding split")
        if self.upsample_mode not in ("nearest", "linear", "hybrid"):
            raise ConfigError(f"unknown upsample_mode {self.upsample_mode!r}")
        if self.critic_steps_per_gen < 1:
            raise ConfigError("critic_steps_per_gen must be >= 1")

    @property
    def trace_len(self) -> int:
        return self.base_len * 4**self.blocks

    def g_channels(self) -> list[tuple[int, int]]:
        """(in_ch, out_ch) per generator block; halving, last maps to 1."""
        ins = [self.base_ch >> i for i in range(self.blocks)]
        outs = ins[1:] + [1]
        return list(zip(ins, outs))

    def d_channels(self) -> list[tuple[int, int]]:
        """(in_ch, out_ch) per critic block; doubling up to base_ch."""
        outs = [self.base_ch >> (self.blocks - 1 - i) for i in range(self.blocks)]
        ins = [1] + outs[:-1]
        return list(zip(ins, outs))

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GanConfig":
        return cls(**json.loads(text))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def desk_config(**overrides) -> GanConfig:
    """Reduced configuration: 1024-sample traces, light channel ladder."""
    base = dict(blocks=3, base_len=16, base_ch=64, sample_rate_hz=25e3)
    base.update(overrides)
    return GanConfig(**base)


class Generator:
    """Latent vectors in [-1, 1]^latent_dim to (batch, trace_len, 1) traces."""

    def __init__(self, cfg: GanConfig, rng: Rng, dtype=np.float32):
        self.cfg = cfg
        self.dense = nn.Dense.init(cfg.latent_dim, cfg.base_len * cfg.base_ch, rng, dtype)
        self.convs: list[nn.Conv1d] = []
        self.bns: list[nn.BatchNorm1d | None] = []
        self.acts: list[nn.Activation] = []
        pad = ((cfg.kernel_len - 1) // 2,
               cfg.kernel_len - 1 - (cfg.kernel_len - 1) // 2)
        for i, (cin, cout) in enumerate(cfg.g_channels()):
            self.convs.append(nn.Conv1d.init(cfg.kernel_len, cin, cout, 1, pad, rng, dtype))
            last = i == cfg.blocks - 1
            self.bns.append(None if last else nn.BatchNorm1d(cout, dtype=dtype))
            self.acts.append(nn.Activation("tanh" if last else "relu"))

    def forward(self, z: np.ndarray, training: bool) -> np.ndarray:
        z = np.asarray(z)
        if z.ndim != 2 or z.shape[1] != self.cfg.latent_dim:
            raise ShapeError(f"z must be (batch, {self.cfg.latent_dim}), got {z.shape}")
        x = self.dense.forward(z)
        x = x.reshape(z.shape[0], self.cfg.base_len, self.cfg.base_ch)
        for conv, bn, act in zip(self.convs, self.bns, self.acts):
            x = nn.upsample(x, 4, self.cfg.upsample_mode)
            x = conv.forward(x)
            if bn is not None:
                x = bn.forward(x, training)
            x = act.forward(x)
        return x

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        g = grad_out
        for conv, bn, act in zip(reversed(self.convs), reversed(self.bns),
                                 reversed(self.acts)):
            g = act.backward(g)
            if bn is not None:
                g = bn.backward(g)
            g = conv.backward(g)
            g = nn.upsample_backward(g, 4, self.cfg.upsample_mode)
        g = g.reshape(g.shape[0], -1)
        return self.dense.backward(g)

    def _named(self):
        yield "dense", self.dense
        for i, conv in enumerate(self.convs):
            yield f"block{i}.conv", conv
        for i, bn in enumerate(self.bns):
            if bn is not None:
                yield f"block{i}.bn", bn

    def params(self) -> dict[str, np.ndarray]:
        return {f"{n}.{k}": v for n, layer in self._named()
                for k, v in layer.params.items()}

    def grads(self) -> dict[str, np.ndarray]:
        return {f"{n}.{k}": v for n, layer in self._named()
                for k, v in layer.grads.items()}

    def state(self) -> dict[str, np.ndarray]:
        out = {}
        for i, bn in enumerate(self.bns):
            if bn is not None:
                for k, v in bn.state.items():
                    out[f"block{i}.bn.{k}"] = v
        return out


class Critic:
    """Traces (batch, trace_len, 1) to one unclamped score per trace."""

    def __init__(self, cfg: GanConfig, rng: Rng, dtype=np.float32):
        self.cfg = cfg
        self.convs: list[nn.Conv1d] = []
        self.acts: list[nn.Activation] = []
        self.drops: list[nn.Dropout] = []
        pad_total = cfg.kernel_len - 4
        pad = (pad_total // 2, pad_total - pad_total // 2)
        for cin, cout in cfg.d_channels():
            self.convs.append(nn.Conv1d.init(cfg.kernel_len, cin, cout, 4, pad, rng, dtype))
            self.acts.append(nn.Activation("leaky_relu", cfg.leaky_slope))
            self.drops.append(nn.Dropout(cfg.dropout))
        self.dense = nn.Dense.init(cfg.base_len * cfg.base_ch, 1, rng, dtype)

    def forward(self, x: np.ndarray, training: bool,
                drop_rng: Rng | None = None) -> np.ndarray:
        x = np.asarray(x)
        expect = (self.cfg.trace_len, 1)
        if x.ndim != 3 or x.shape[1:] != expect:
            raise ShapeError(f"input must be (batch, {expect[0]}, 1), got {x.shape}")
        for conv, act, drop in zip(self.convs, self.acts, self.drops):
            x = drop.forward(act.forward(conv.forward(x)), training, drop_rng)
        self._flat_shape = x.shape
        x = x.reshape(x.shape[0], -1)
        return self.dense.forward(x)[:, 0]

    def backward(self, grad_scores: np.ndarray) -> np.ndarray:
        g = self.dense.backward(np.asarray(grad_scores)[:, None])
        g = g.reshape(self._flat_shape)
        for conv, act, drop in zip(reversed(self.convs), reversed(self.acts),
                                   reversed(self.drops)):
            g = conv.backward(act.backward(drop.backward(g)))
        return g

    def _named(self):
        for i, conv in enumerate(self.convs):
            yield f"block{i}.conv", conv
        yield "dense", self.dense

    def params(self) -> dict[str, np.ndarray]:
        return {f"{n}.{k}": v for n, layer in self._named()
                for k, v in layer.params.items()}

    def grads(self) -> dict[str, np.ndarray]:
        return {f"{n}.{k}": v for n, layer in self._named()
                for k, v in layer.grads.items()}

    def state(self) -> dict[str, np.ndarray]:
        return {}


@dataclass
class GanModel:
    """Generator + critic + the metadata a checkpoint carries."""

    generator: Generator
    critic: Critic
    cfg: GanConfig
    sample_rate_hz: float
    epoch: int = 0
    seed: int = 0

    def params(self) -> dict[str, np.ndarray]:
        out = {f"g.{k}": v for k, v in self.generator.params().items()}
        out.update({f"c.{k}": v for k, v in self.critic.params().items()})
        return out


def build_model(cfg: GanConfig, rng: Rng, dtype=np.float32) -> GanModel:
    """Deterministically initialized model; shape ladder asserted."""
    gen = Generator(cfg, rng.substream(_S_G_INIT), dtype)
    crit = Critic(cfg, rng.substream(_S_C_INIT), dtype)
    # ladder invariants: G output length == C input length == trace_len,
    # critic flatten dim == base_len * base_ch
    length = cfg.base_len
    for _ in range(cfg.blocks):
        length *= 4
    if length != cfg.trace_len:
        raise ConfigError("generator ladder does not reach trace_len")
    if crit.dense.weights.shape[0] != cfg.base_len * cfg.base_ch:
        raise ConfigError("critic flatten dim != base_len * base_ch")
    return GanModel(gen, crit, cfg, cfg.sample_rate_hz, epoch=0, seed=rng.seed)


def critic_loss(d_real: np.ndarray, d_fake: np.ndarray) -> float:
    """mean(d_fake) - mean(d_real); invariant to a shared constant shift."""
    d_real = np.asarray(d_real)
    d_fake = np.asarray(d_fake)
    if d_real.shape != d_fake.shape or d_real.ndim != 1 or d_real.size == 0:
        raise ShapeError("d_real and d_fake must be equal-length 1-D score arrays")
    return float(np.mean(d_fake) - np.mean(d_real))


def generator_loss(d_fake: np.ndarray) -> float:
    """-mean(d_fake)."""
    d_fake = np.asarray(d_fake)
    if d_fake.size == 0:
        raise ShapeError("d_fake must be nonempty")
    return float(-np.mean(d_fake))


@dataclass
class TrainHistory:
    epoch: list[int] = field(default_factory=list)
    d_loss: list[float] = field(default_factory=list)
    g_loss: list[float] = field(default_factory=list)
    fid: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("epoch,d_loss,g_loss,fid,seconds\n")
            for row in zip(self.epoch, self.d_loss, self.g_loss, self.fid, self.seconds):
                fh.write("%d,%.9g,%.9g,%.9g,%.4f\n" % row)


def _monitor_fid(reference_feats: np.ndarray, model: GanModel,
                 z_eval: np.ndarray, ref_stats) -> float:
    fake = model.generator.forward(z_eval, training=False)
    ts = TraceSet(fake[:, :, 0], model.sample_rate_hz)
    gen_feats = feature_matrix8(ts)
    return fid(standardize(reference_feats, ref_stats),
               standardize(gen_feats, ref_stats))


def _monitor_setup(data: TraceSet, cfg: GanConfig, rng: Rng):
    """Holdout split plus the fixed evaluation latents, seeded like train()."""
    n = len(data)
    n_hold = int(round(cfg.holdout_frac * n))
    perm = rng.substream(_S_SPLIT).permutation(n)
    hold_idx, train_idx = perm[:n_hold], perm[n_hold:]
    if len(hold_idx) < 9:
        return hold_idx, train_idx, None, None, None
    hold_feats = feature_matrix8(TraceSet(data.data[hold_idx], data.sample_rate_hz))
    ref_stats = (hold_feats.mean(axis=0), hold_feats.std(axis=0))
    z_eval = rng.substream(_S_EVAL).uniform(
        len(hold_idx) * cfg.latent_dim).reshape(len(hold_idx), cfg.latent_dim)
    return hold_idx, train_idx, hold_feats, ref_stats, z_eval


def holdout_fid(model: GanModel, data: TraceSet, cfg: GanConfig, rng: Rng) -> float:
    """The training monitor's FID for the model as it currently stands.

    Uses the same held-out slice and evaluation latents that train() with
    the same rng seed will use, so an initial-model value is directly
    comparable to the history entries.
    """
    _, _, hold_feats, ref_stats, z_eval = _monitor_setup(data, cfg, rng)
    if hold_feats is None:
        raise ConfigError("holdout slice below 9 traces; FID undefined")
    dtype = model.generator.dense.weights.dtype
    return _monitor_fid(hold_feats, model, z_eval.astype(dtype), ref_stats)


def train(model: GanModel, data: TraceSet, cfg: GanConfig, rng: Rng,
          checkpoint_dir=None, log_path=None, verbose: bool = False,
          resume_state: dict | None = None) -> tuple[GanModel, TrainHistory]:
    """Wasserstein training with weight clipping and FID early stopping.

    One epoch is a pass over the shuffled training slice in minibatches;
    every ``critic_steps_per_gen`` critic updates trigger one generator
    update. A 10% held-out slice (when large enough for FID, >= 9 traces)
    is scored every ``eval_every`` epochs; training stops early after
    ``early_stop_patience`` evaluations without improvement. Checkpoints
    are written per epoch and at the best FID when ``checkpoint_dir`` is
    given. ``resume_state`` (the blob dict of a loaded checkpoint) restores
    the optimizer moments when continuing a run. Fully deterministic for a
    fixed seed in single-threaded mode.
    """
    if data.trace_len != cfg.trace_len:
        raise ConfigError(
            f"data trace length {data.trace_len} != model trace_len {cfg.trace_len}"
        )
    if float(np.max(np.abs(data.data))) > 1.0 + 1e-6:
        raise ConfigError("training data must be normalized to [-1, 1]")

    history = TrainHistory()
    if cfg.epochs == 0:
        return model, history

    shuffle_rng = rng.substream(_S_SHUFFLE)
    z_rng = rng.substream(_S_LATENT)
    drop_rng = rng.substream(_S_DROPOUT)

    hold_idx, train_idx, hold_feats, ref_stats, z_eval = _monitor_setup(data, cfg, rng)
    if len(train_idx) < cfg.batch:
        raise ConfigError(
            f"{len(train_idx)} training traces cannot fill a batch of {cfg.batch}"
        )
    monitor = hold_feats is not None

    dtype = model.generator.dense.weights.dtype
    x_all = data.data.astype(dtype)[:, :, None]
    opt_c = nn.Adam(model.critic.params(), lr=cfg.lr, weight_decay=cfg.l2,
                    clip_value=cfg.clip_value)
    opt_g = nn.Adam(model.generator.params(), lr=cfg.lr, weight_decay=cfg.l2)
    if resume_state is not None and "opt_g.t" in resume_state:
        opt_g.load_state_blobs("opt_g", resume_state)
        opt_c.load_state_blobs("opt_c", resume_state)

    model.sample_rate_hz = data.sample_rate_hz
    best_fid = math.inf
    evals_since_best = 0

    def sample_z(batch: int) -> np.ndarray:
        return z_rng.uniform(batch * cfg.latent_dim).reshape(
            batch, cfg.latent_dim).astype(dtype)

    last_epoch = model.epoch + cfg.epochs
    for epoch in range(model.epoch + 1, last_epoch + 1):
        t0 = time.perf_counter()
        order = train_idx[shuffle_rng.permutation(len(train_idx))]
        batches = [order[i : i + cfg.batch] for i in range(0, len(order), cfg.batch)]
        batches = [b for b in batches if len(b) >= 2]

        d_losses, g_losses = [], []
        since_gen = 0

        def generator_update(step):
            z = sample_z(cfg.batch)
            x_fake = model.generator.forward(z, training=True)
            d_fake = model.critic.forward(x_fake, training=True, drop_rng=drop_rng)
            loss_g = generator_loss(d_fake)
            if not math.isfinite(loss_g):
                raise NumericsError(
                    f"non-finite generator loss at epoch {epoch} step {step}"
                )
            g_losses.append(loss_g)
            grad_x = model.critic.backward(
                np.full(cfg.batch, -1.0 / cfg.batch, dtype=dtype))
            model.generator.backward(grad_x)
            opt_g.step(model.generator.grads())

        for step, idx in enumerate(batches):
            x_real = x_all[idx]
            z = sample_z(len(idx))
            x_fake = model.generator.forward(z, training=True)

            d_real = model.critic.forward(x_real, training=True, drop_rng=drop_rng)
            model.critic.backward(np.full(len(idx), -1.0 / len(idx), dtype=dtype))
            grads = {k: v.copy() for k, v in model.critic.grads().items()}
            d_fake = model.critic.forward(x_fake, training=True, drop_rng=drop_rng)
            model.critic.backward(np.full(len(idx), 1.0 / len(idx), dtype=dtype))
            for k, v in model.critic.grads().items():
                grads[k] += v
            opt_c.step(grads)

            loss_d = critic_loss(d_real, d_fake)
            if not math.isfinite(loss_d):
                raise NumericsError(f"non-finite critic loss at epoch {epoch} step {step}")
            d_losses.append(loss_d)

            since_gen += 1
            if since_gen == cfg.critic_steps_per_gen:
                since_gen = 0
                generator_update(step)
        if since_gen:  # short epochs still train the generator
            generator_update(len(batches) - 1)

        model.epoch = epoch
        fid_val = math.nan
        if monitor and (epoch % cfg.eval_every == 0 or epoch == last_epoch):
            fid_val = _monitor_fid(hold_feats, model, z_eval.astype(dtype), ref_stats)
            if fid_val < best_fid:
                best_fid = fid_val
                evals_since_best = 0
                if checkpoint_dir is not None:
                    save_model(f"{checkpoint_dir}/best.ckpt", model, opt_g, opt_c)
            else:
                evals_since_best += 1

        history.epoch.append(epoch)
        history.d_loss.append(float(np.mean(d_losses)) if d_losses else math.nan)
        history.g_loss.append(float(np.mean(g_losses)) if g_losses else math.nan)
        history.fid.append(fid_val)
        history.seconds.append(time.perf_counter() - t0)
        if verbose:
            print(f"epoch {epoch:4d}  d_loss {history.d_loss[-1]:+.5f}  "
                  f"g_loss {history.g_loss[-1]:+.5f}  fid {fid_val:.4g}")
        if checkpoint_dir is not None:
            save_model(f"{checkpoint_dir}/epoch_{epoch:03d}.ckpt", model, opt_g, opt_c)
        if log_path is not None:
            history.write_csv(log_path)
        if monitor and evals_since_best >= cfg.early_stop_patience:
            break
    return model, history


def generate(model: GanModel, n: int, rng: Rng, chunk: int = 256) -> TraceSet:
    """Sample ``n`` traces in inference mode; trace i uses RNG substream i."""
    if n < 1:
        raise InvalidParamError("n must be >= 1")
    cfg = model.cfg
    dtype = model.generator.dense.weights.dtype
    rows = np.empty((n, cfg.trace_len), dtype=np.float64)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        z = np.stack([rng.substream(i).uniform(cfg.latent_dim)
                      for i in range(start, stop)]).astype(dtype)
        out = model.generator.forward(z, training=False)
        rows[start:stop] = out[:, :, 0]
    return TraceSet(rows, model.sample_rate_hz, name="generated")


def save_model(path, model: GanModel, opt_g: nn.Adam | None = None,
               opt_c: nn.Adam | None = None) -> None:
    blobs: dict[str, np.ndarray | bytes] = {
        "meta.config_json": model.cfg.to_json().encode(),
        "meta.config_hash": model.cfg.digest().encode(),
        "meta.epoch": np.array(model.epoch, dtype=np.int64),
        "meta.seed": np.array(model.seed, dtype=np.int64),
        "meta.sample_rate_hz": np.array(model.sample_rate_hz, dtype=np.float64),
    }
    for k, v in model.generator.params().items():
        blobs[f"g.{k}"] = v
    for k, v in model.generator.state().items():
        blobs[f"gs.{k}"] = v
    for k, v in model.critic.params().items():
        blobs[f"c.{k}"] = v
    if opt_g is not None:
        blobs.update(opt_g.state_blobs("opt_g"))
    if opt_c is not None:
        blobs.update(opt_c.state_blobs("opt_c"))
    nn.save_blobs(path, blobs)


def load_model(path) -> tuple[GanModel, dict]:
    """Rebuild a model from a checkpoint; returns (model, raw blobs)."""
    blobs = nn.load_blobs(path)
    cfg = GanConfig.from_json(blobs["meta.config_json"].decode())
    model = build_model(cfg, Rng(int(blobs["meta.seed"])))
    model.epoch = int(blobs["meta.epoch"])
    model.sample_rate_hz = float(blobs["meta.sample_rate_hz"])
    for k, v in model.generator.params().items():
        v[...] = blobs[f"g.{k}"].reshape(v.shape)
    for k, v in model.generator.state().items():
        v[...] = blobs[f"gs.{k}"].reshape(v.shape)
    for k, v in model.critic.params().items():
        v[...] = blobs[f"c.{k}"].reshape(v.shape)
    return model, blobs
