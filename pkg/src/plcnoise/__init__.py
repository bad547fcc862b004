"""Cyclostationary powerline-noise toolkit.

Parametric synthesis of cyclic impulse noise, a 1-D convolutional
Wasserstein GAN trained on trace datasets, and the evaluation stack:
per-trace statistics, cyclic spectral density/coherence, PCA, and the
Fréchet distance over trace features.

Submodules are imported lazily so the CLI can pin BLAS thread pools before
numpy loads.
"""

from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    # traces
    "NoiseTrace": "traces", "TraceSet": "traces", "save_traceset": "traces",
    "load_traceset": "traces", "export_traceset_csv": "traces",
    "normalize_maxabs": "traces",
    # rng
    "Rng": "rng",
    # synth
    "SpectralPeak": "synth", "FreshConfig": "synth", "RegionSpec": "synth",
    "PscgmConfig": "synth", "spectral_shape_eval": "synth",
    "temporal_shape_eval": "synth", "gen_fresh": "synth", "gen_pscgm": "synth",
    "dataset1_like_config": "synth", "dataset2_like_config": "synth",
    "desk_fresh_config": "synth",
    # gan
    "GanConfig": "gan", "GanModel": "gan", "build_model": "gan",
    "critic_loss": "gan", "generator_loss": "gan", "train": "gan",
    "generate": "gan", "save_model": "gan", "load_model": "gan",
    "desk_config": "gan", "TrainHistory": "gan", "holdout_fid": "gan",
    # features
    "FeatureVector": "features", "FEATURE_NAMES": "features",
    "feature_vector": "features",
    "autocorr": "features", "feature_matrix": "features",
    "feature_matrix8": "features", "standardize": "features",
    "PcaModel": "features", "pca_fit": "features", "pca_project": "features",
    "fid": "features",
    # cyclic
    "CyclicSpectrum": "cyclic", "csd": "cyclic", "csc": "cyclic",
    "direct_csd": "cyclic", "exceedance_stats": "cyclic",
    "ExceedanceResult": "cyclic", "max_coeff_distribution": "cyclic",
    "spectrogram": "cyclic", "harmonic_alphas": "cyclic",
    # report
    "EvalParams": "report", "EvalReport": "report", "evaluate_sets": "report",
    "write_report": "report",
}

__all__ = sorted(_EXPORTS) + ["errors", "nn", "__version__"]


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(f".{_EXPORTS[name]}", __name__), name)
    if name in ("errors", "nn", "traces", "rng", "synth", "gan", "features",
                "cyclic", "report", "config", "cli"):
        return import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return __all__
