"""Synthesize the two parametric cyclostationary noise families.

Walks through both generators at full scale (16384 samples at 400 kHz,
about five 122 Hz cycles per trace), prints their basic statistics, and
saves the sets as NGTS files plus a quick-look plot if matplotlib is
around.

Run:  python demos/01_synthesize_noise.py
"""

import numpy as np

from plcnoise import (
    Rng,
    dataset1_like_config,
    dataset2_like_config,
    gen_fresh,
    gen_pscgm,
    normalize_maxabs,
    save_traceset,
)

rng = Rng(seed=1)

# --- impulse-burst family: spectral peaks + exponential temporal envelope
fresh_cfg = dataset2_like_config()
print(f"burst family: cycle {fresh_cfg.cycle_period_s * 1e3:.3f} ms "
      f"({fresh_cfg.samples_per_cycle} samples), "
      f"peaks at {[p.f0_hz / 1e3 for p in fresh_cfg.spectral_peaks]} kHz")
fresh = gen_fresh(fresh_cfg, n_traces=32, trace_len=16384, rng=rng)
print(f"  generated {len(fresh)} x {fresh.trace_len}, "
      f"rms {fresh.data.std():.4f} V, peak {np.abs(fresh.data).max():.3f} V")

# --- piecewise-region family: 3 regions per cycle, each its own spectrum
pscgm_cfg = dataset1_like_config()
durations = [r.duration_s * 1e3 for r in pscgm_cfg.regions]
print(f"region family: regions of {np.round(durations, 2)} ms at "
      f"rms {[r.rms_volts for r in pscgm_cfg.regions]} V")
pscgm = gen_pscgm(pscgm_cfg, n_traces=32, trace_len=16384, rng=rng)
print(f"  generated {len(pscgm)} x {pscgm.trace_len}, "
      f"rms {pscgm.data.std():.4f} V")

# normalization into [-1, 1] (one global scale preserves relative amplitude)
fresh_n, scale = normalize_maxabs(fresh)
print(f"normalized burst set by global scale {scale:.4f}")

save_traceset(fresh_n, "demo_fresh.ngts")
save_traceset(pscgm, "demo_pscgm.ngts")
print("wrote demo_fresh.ngts, demo_pscgm.ngts")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(2, 1, figsize=(10, 5), sharex=True)
    t_ms = np.arange(16384) / fresh.sample_rate_hz * 1e3
    axes[0].plot(t_ms, fresh.data[0], lw=0.4)
    axes[0].set_title("impulse-burst trace (five cycles)")
    axes[1].plot(t_ms, pscgm.data[0], lw=0.4)
    axes[1].set_title("piecewise-region trace")
    axes[1].set_xlabel("time [ms]")
    fig.tight_layout()
    fig.savefig("demo_traces.png", dpi=120)
    print("wrote demo_traces.png")
except ImportError:
    print("matplotlib not installed; skipping the plot")
