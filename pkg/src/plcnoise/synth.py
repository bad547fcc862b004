"""Parametric cyclostationary noise synthesis.

Two generator families, both driven by white Gaussian excitation that is
shaped in the frequency domain (FFT -> magnitude multiply -> inverse FFT)
and then in the time domain:

* ``gen_fresh`` -- one process per cycle: the excitation spectrum is shaped
  by the sum of two asymmetric double-sided exponential-decay peaks, then
  the time-domain cycle is shaped by a symmetric double-sided exponential
  envelope. Produces impulse bursts that repeat at the cycle rate.

* ``gen_pscgm`` -- each cycle is split into 2-3 contiguous regions; every
  region is an independently excited Gaussian process with its own
  sum-of-exponential-decay spectral magnitude and RMS level. Adjacent
  regions are joined with a raised-cosine crossfade over 10% of the shorter
  neighbour (windowing only; regions stay uncorrelated).

All outputs are deterministic functions of (config, seed): trace ``i``
always draws from RNG substream ``i``, so generation order or parallelism
cannot change results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidConfigError,
    LengthError,
    OutOfRangeError,
)
from .rng import Rng
from .traces import TraceSet

__all__ = [
    "SpectralPeak",
    "FreshConfig",
    "RegionSpec",
    "PscgmConfig",
    "spectral_shape_eval",
    "temporal_shape_eval",
    "gen_fresh",
    "gen_pscgm",
    "dataset1_like_config",
    "dataset2_like_config",
    "desk_fresh_config",
]


@dataclass(frozen=True)
class SpectralPeak:
    """Asymmetric double-sided exponential-decay spectral magnitude peak."""

    f0_hz: float
    amplitude: float
    decay_left_hz: float
    decay_right_hz: float

    def __post_init__(self):
        if self.amplitude < 0:
            raise InvalidConfigError("peak amplitude must be >= 0")
        if self.decay_left_hz <= 0 or self.decay_right_hz <= 0:
            raise InvalidConfigError("peak decay constants must be > 0")


def spectral_shape_eval(peak: SpectralPeak, f) -> np.ndarray | float:
    """Magnitude of ``peak`` at frequency ``f`` (Hz, scalar or array).

    amplitude * exp(-(f0-f)/decay_left) below the peak,
    amplitude * exp(-(f-f0)/decay_right) at and above it;
    the maximum (= amplitude) is attained at f = f0.
    """
    f = np.asarray(f, dtype=np.float64)
    below = f < peak.f0_hz
    decay = np.where(below, peak.decay_left_hz, peak.decay_right_hz)
    out = peak.amplitude * np.exp(-np.abs(f - peak.f0_hz) / decay)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FreshConfig:
    """Parameters for the frequency-then-time shaped cyclic generator.

    cycle_period_s is half the AC mains period (1/122 s by default
    elsewhere); exactly two spectral peaks are required. The temporal
    envelope exp(-|t - t_c| / temporal_decay_s) peaks at
    t_c = temporal_center_frac * cycle_period_s.
    """

    cycle_period_s: float
    spectral_peaks: tuple[SpectralPeak, SpectralPeak]
    temporal_center_frac: float
    temporal_decay_s: float
    sample_rate_hz: float
    random_phase: bool = False

    def __post_init__(self):
        if len(self.spectral_peaks) != 2:
            raise InvalidConfigError("exactly two spectral peaks required")
        if self.cycle_period_s <= 0 or self.sample_rate_hz <= 0:
            raise InvalidConfigError("cycle period and sample rate must be > 0")
        if not 0 <= self.temporal_center_frac < 1:
            raise InvalidConfigError("temporal_center_frac must be in [0, 1)")
        if self.temporal_decay_s <= 0:
            raise InvalidConfigError("temporal_decay_s must be > 0")
        if self.samples_per_cycle < 2:
            raise InvalidConfigError("cycle shorter than two samples")

    @property
    def samples_per_cycle(self) -> int:
        return int(round(self.cycle_period_s * self.sample_rate_hz))


def temporal_shape_eval(cfg: FreshConfig, t) -> np.ndarray | float:
    """Symmetric double-sided exponential envelope at time ``t`` in a cycle.

    gain = exp(-|t - t_c| / temporal_decay_s), peak value 1 at t_c.
    Raises OutOfRangeError for t outside [0, cycle_period_s).
    """
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or np.any(t >= cfg.cycle_period_s):
        raise OutOfRangeError("t must lie in [0, cycle_period_s)")
    t_c = cfg.temporal_center_frac * cfg.cycle_period_s
    out = np.exp(-np.abs(t - t_c) / cfg.temporal_decay_s)
    return out if out.ndim else float(out)


def _fresh_cycle_shapes(cfg: FreshConfig) -> tuple[np.ndarray, np.ndarray]:
    """Precompute (spectral magnitude over FFT bins, temporal envelope)."""
    p = cfg.samples_per_cycle
    freqs = np.fft.fftfreq(p, d=1.0 / cfg.sample_rate_hz)
    # magnitude mirrored onto negative frequencies keeps the output real
    mag = sum(spectral_shape_eval(pk, np.abs(freqs)) for pk in cfg.spectral_peaks)
    t = np.arange(p) / cfg.sample_rate_hz
    env = temporal_shape_eval(cfg, t)
    return np.asarray(mag), np.asarray(env)


def gen_fresh(cfg: FreshConfig, n_traces: int, trace_len: int, rng: Rng) -> TraceSet:
    """Generate ``n_traces`` cyclic noise traces of ``trace_len`` samples.

    Per cycle: white Gaussian excitation -> FFT -> multiply bins by the
    summed peak magnitudes (mirrored to negative frequencies) -> inverse
    FFT -> pointwise multiply by the temporal envelope. The imaginary
    residue of the inverse transform must stay below 1e-9 of the cycle RMS
    and is discarded.

    trace_len must be a power of two and span at least two cycles.
    """
    if n_traces < 1:
        raise InvalidConfigError("n_traces must be >= 1")
    if trace_len < 2 or (trace_len & (trace_len - 1)) != 0:
        raise LengthError(f"trace_len must be a power of two, got {trace_len}")
    p = cfg.samples_per_cycle
    if trace_len < 2 * p:
        raise LengthError(
            f"trace_len {trace_len} spans fewer than two cycles of {p} samples"
        )
    mag, env = _fresh_cycle_shapes(cfg)
    max_amp = max(pk.amplitude for pk in cfg.spectral_peaks)

    data = np.empty((n_traces, trace_len), dtype=np.float64)
    for i in range(n_traces):
        sub = rng.substream(i)
        offset = int(sub.integers(1, 0, p)[0]) if cfg.random_phase else 0
        n_cycles = math.ceil((trace_len + offset) / p)
        cycles = np.empty((n_cycles, p), dtype=np.float64)
        for c in range(n_cycles):
            exc = sub.gaussian(p)
            shaped = np.fft.ifft(np.fft.fft(exc) * mag)
            rms = np.sqrt(np.mean(shaped.real**2))
            if max_amp > 0 and rms > 0:
                resid = np.max(np.abs(shaped.imag))
                if resid > 1e-9 * rms:
                    raise InvalidConfigError(
                        f"imaginary residue {resid:.3e} exceeds 1e-9 of RMS"
                    )
            cycles[c] = shaped.real * env
        data[i] = cycles.reshape(-1)[offset : offset + trace_len]
    return TraceSet(data, cfg.sample_rate_hz, name="fresh")


@dataclass(frozen=True)
class RegionSpec:
    """One region of a cycle: spectral magnitude triples and target RMS.

    psd_shape is a list of (center_hz, gain, decay_hz) triples summed into
    the region's spectral magnitude, each a symmetric double-sided
    exponential decay around its center. An empty list means flat
    (all-pass) shaping.
    """

    duration_s: float
    psd_shape: tuple[tuple[float, float, float], ...]
    rms_volts: float

    def __post_init__(self):
        if self.duration_s <= 0:
            raise InvalidConfigError("region duration must be > 0")
        if self.rms_volts < 0:
            raise InvalidConfigError("region rms_volts must be >= 0")
        for center, gain, decay in self.psd_shape:
            if not np.isfinite(gain) or gain < 0:
                raise InvalidConfigError("psd_shape gains must be finite and >= 0")
            if decay <= 0:
                raise InvalidConfigError("psd_shape decay_hz must be > 0")

    def magnitude(self, f: np.ndarray) -> np.ndarray:
        """Spectral magnitude at |f|; flat 1 for an empty shape list."""
        if not self.psd_shape:
            return np.ones_like(f, dtype=np.float64)
        af = np.abs(f)
        mag = np.zeros_like(af, dtype=np.float64)
        for center, gain, decay in self.psd_shape:
            mag += gain * np.exp(-np.abs(af - center) / decay)
        return mag


@dataclass(frozen=True)
class PscgmConfig:
    """Piecewise-region cyclostationary Gaussian model configuration.

    Region durations must sum to cycle_period_s within one sample period.
    """

    cycle_period_s: float
    regions: tuple[RegionSpec, ...]
    sample_rate_hz: float
    random_phase: bool = False

    def __post_init__(self):
        if self.cycle_period_s <= 0 or self.sample_rate_hz <= 0:
            raise InvalidConfigError("cycle period and sample rate must be > 0")
        if not 2 <= len(self.regions) <= 3:
            raise InvalidConfigError("need 2 or 3 regions")
        total = sum(r.duration_s for r in self.regions)
        if abs(total - self.cycle_period_s) > 1.0 / self.sample_rate_hz:
            raise InvalidConfigError(
                f"region durations sum to {total:.6g} s, cycle is "
                f"{self.cycle_period_s:.6g} s (tolerance one sample period)"
            )
        if any(self.region_lengths() < 2):
            raise InvalidConfigError("every region must span at least two samples")

    @property
    def samples_per_cycle(self) -> int:
        return int(round(self.cycle_period_s * self.sample_rate_hz))

    def region_lengths(self) -> np.ndarray:
        """Per-region sample counts; boundaries from cumulative rounding."""
        edges = np.round(
            np.cumsum([0.0] + [r.duration_s for r in self.regions]) * self.sample_rate_hz
        ).astype(int)
        edges[-1] = self.samples_per_cycle
        return np.diff(edges)


def _shaped_gaussian(sub: Rng, n: int, region: RegionSpec, fs: float) -> np.ndarray:
    """White Gaussian noise spectrally shaped to the region's magnitude.

    The magnitude is normalized to unit power gain, so the output variance
    equals rms_volts**2 in expectation (not forced per segment).
    """
    exc = sub.gaussian(n)
    freqs = np.fft.fftfreq(n, d=1.0 / fs)
    mag = region.magnitude(freqs)
    power_gain = np.mean(mag**2)
    if power_gain == 0 or region.rms_volts == 0:
        return np.zeros(n)
    mag = mag / np.sqrt(power_gain)
    shaped = np.fft.ifft(np.fft.fft(exc) * mag).real
    return region.rms_volts * shaped


def gen_pscgm(cfg: PscgmConfig, n_traces: int, trace_len: int, rng: Rng) -> TraceSet:
    """Generate piecewise-region cyclostationary Gaussian noise traces.

    Every cycle re-excites each region independently; regions are joined by
    raised-cosine amplitude crossfades over 10% of the shorter neighbour.
    trace_len must cover at least one full cycle.
    """
    if n_traces < 1:
        raise InvalidConfigError("n_traces must be >= 1")
    p = cfg.samples_per_cycle
    if trace_len < p:
        raise LengthError(f"trace_len {trace_len} is shorter than one cycle ({p})")
    lens = cfg.region_lengths()
    n_regions = len(lens)
    fs = cfg.sample_rate_hz

    data = np.empty((n_traces, trace_len), dtype=np.float64)
    for i in range(n_traces):
        sub = rng.substream(i)
        offset = int(sub.integers(1, 0, p)[0]) if cfg.random_phase else 0
        n_cycles = math.ceil((trace_len + offset) / p)
        total = n_cycles * p
        acc = np.zeros(total)

        # Segment r of cycle c spans [start, start+len); each boundary k
        # (cyclic, including cycle joins) owns a fade zone of ov_k samples
        # centred on it. A segment extends to the edges of its fade zones
        # and carries an envelope: cos^2 ramp up, flat core, ramp down.
        seg_index = 0
        for c in range(n_cycles):
            base = c * p
            starts = base + np.concatenate(([0], np.cumsum(lens[:-1])))
            for r in range(n_regions):
                start, length = int(starts[r]), int(lens[r])
                ov_l = round(0.1 * min(lens[(r - 1) % n_regions], lens[r]))
                ov_r = round(0.1 * min(lens[r], lens[(r + 1) % n_regions]))
                ext_start = start - (ov_l - ov_l // 2)
                ext_end = start + length + ov_r // 2
                if seg_index == 0:
                    ext_start, ov_l = start, 0  # no fade at the trace edge
                if c == n_cycles - 1 and r == n_regions - 1:
                    ext_end, ov_r = start + length, 0
                seg_len = ext_end - ext_start
                seg = _shaped_gaussian(sub, seg_len, cfg.regions[r], fs)
                envelope = np.ones(seg_len)
                if ov_l > 0:
                    u = (np.arange(ov_l) + 0.5) / ov_l
                    envelope[:ov_l] = 0.5 * (1 - np.cos(np.pi * u))
                if ov_r > 0:
                    u = (np.arange(ov_r) + 0.5) / ov_r
                    envelope[-ov_r:] = 0.5 * (1 + np.cos(np.pi * u))
                lo = max(ext_start, 0)
                hi = min(ext_end, total)
                acc[lo:hi] += (seg * envelope)[lo - ext_start : hi - ext_start]
                seg_index += 1
        data[i] = acc[offset : offset + trace_len]
    return TraceSet(data, fs, name="pscgm")


def dataset1_like_config(sample_rate_hz: float = 400e3,
                         fundamental_hz: float = 122.0) -> PscgmConfig:
    """Representative three-region config (background / impulse / impulse).

    The region values are illustrative defaults for this toolkit, not the
    LV14 parameter set of any standard.
    """
    cycle = 1.0 / fundamental_hz
    return PscgmConfig(
        cycle_period_s=cycle,
        regions=(
            RegionSpec(
                duration_s=0.55 * cycle,
                psd_shape=((10e3, 1.0, 25e3),),
                rms_volts=0.01,
            ),
            RegionSpec(
                duration_s=0.15 * cycle,
                psd_shape=((60e3, 1.0, 12e3), (140e3, 0.4, 20e3)),
                rms_volts=0.20,
            ),
            RegionSpec(
                duration_s=0.30 * cycle,
                psd_shape=((30e3, 1.0, 18e3),),
                rms_volts=0.05,
            ),
        ),
        sample_rate_hz=sample_rate_hz,
    )


def dataset2_like_config(sample_rate_hz: float = 400e3,
                         fundamental_hz: float = 122.0) -> FreshConfig:
    """Two-peak impulse-burst config at the default 122 Hz fundamental."""
    return FreshConfig(
        cycle_period_s=1.0 / fundamental_hz,
        spectral_peaks=(
            SpectralPeak(f0_hz=30e3, amplitude=1.0,
                         decay_left_hz=8e3, decay_right_hz=15e3),
            SpectralPeak(f0_hz=60e3, amplitude=0.4,
                         decay_left_hz=10e3, decay_right_hz=20e3),
        ),
        temporal_center_frac=0.3,
        temporal_decay_s=0.08 / fundamental_hz,
        sample_rate_hz=sample_rate_hz,
    )


def desk_fresh_config(fundamental_hz: float = 122.0) -> FreshConfig:
    """Scaled-down two-peak config: 1024 samples at 25 kHz = five cycles."""
    return FreshConfig(
        cycle_period_s=1.0 / fundamental_hz,
        spectral_peaks=(
            SpectralPeak(f0_hz=3e3, amplitude=1.0,
                         decay_left_hz=0.8e3, decay_right_hz=1.5e3),
            SpectralPeak(f0_hz=6e3, amplitude=0.4,
                         decay_left_hz=1e3, decay_right_hz=2e3),
        ),
        temporal_center_frac=0.3,
        temporal_decay_s=0.08 / fundamental_hz,
        sample_rate_hz=25e3,
    )
