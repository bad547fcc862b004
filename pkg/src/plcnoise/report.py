"""Evaluation reports: feature, exceedance, band, and distance tables.

``evaluate_sets`` compares a reference trace set against a generated one
and returns everything the CSV tables need: the nine feature statistics
(mean / standard deviation / median per set), |CSC| exceedance percentages
at the cycle-frequency harmonics with the aggregate error row, the
distribution of per-trace peak-coherence locations over spectral bands
with its error row, the Fréchet distance (raw standardized features by
default, PCA-score space on request), and the first two PCA scores of both
sets for scatter plots. ``write_report`` serializes all of it as CSV;
plots are optional extras behind matplotlib.
"""

from __future__ import annotations

import csv as _csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cyclic import (
    ExceedanceResult,
    exceedance_stats,
    harmonic_alphas,
    max_coeff_distribution,
    spectrogram,
)
from .errors import InvalidParamError
from .features import (
    FEATURE_NAMES,
    feature_matrix,
    fid,
    pca_fit,
    pca_project,
    standardize,
)
from .traces import TraceSet

__all__ = ["EvalParams", "EvalReport", "evaluate_sets", "write_report",
           "write_diagnostic_plots", "spectrogram_csv"]

_DEFAULT_BANDS = ((0.0, 50e3), (50e3, 100e3), (100e3, 150e3), (150e3, 200e3))


@dataclass(frozen=True)
class EvalParams:
    """Analysis grid for a comparison run.

    thresh follows the dataset presets elsewhere (0.9 / 0.5 / 0.3);
    error_harmonics limits the exceedance error row to the first k
    harmonics (None = all). fid_space selects 'features' (z-scored by the
    reference set) or 'pca' (scores in the reference PCA basis).
    """

    fundamental_hz: float = 122.0
    n_harmonics: int = 6
    thresh: float = 0.5
    f_range: tuple[float, float] = (0.0, 200e3)
    nfft: int = 4096
    bands: tuple[tuple[float, float], ...] = _DEFAULT_BANDS
    peak_thresh_volts: float = 0.05
    fid_space: str = "features"
    error_harmonics: int | None = None

    def __post_init__(self):
        if self.fid_space not in ("features", "pca"):
            raise InvalidParamError(f"unknown fid_space {self.fid_space!r}")


@dataclass
class EvalReport:
    params: EvalParams
    feature_stats: dict[str, np.ndarray]  # set label -> (3, 9) mean/std/median
    exceedance: ExceedanceResult
    band_pct: dict[str, np.ndarray]  # set label -> per-band percentages
    band_error: float
    fid_value: float
    pca_scores: dict[str, np.ndarray]  # set label -> (n, 2) first two scores
    labels: tuple[str, str] = ("reference", "generated")


def _stats_block(feats: np.ndarray) -> np.ndarray:
    return np.stack([feats.mean(axis=0), feats.std(axis=0), np.median(feats, axis=0)])


def evaluate_sets(reference: TraceSet, generated: TraceSet,
                  params: EvalParams = EvalParams()) -> EvalReport:
    """Full metric comparison of two trace sets (reference first)."""
    alphas = harmonic_alphas(params.fundamental_hz, params.n_harmonics)
    err_alphas = (alphas if params.error_harmonics is None
                  else alphas[: params.error_harmonics])

    f_ref = feature_matrix(reference, params.peak_thresh_volts)
    f_gen = feature_matrix(generated, params.peak_thresh_volts)
    feature_stats = {"reference": _stats_block(f_ref), "generated": _stats_block(f_gen)}

    exc = exceedance_stats(generated, alphas, params.thresh, params.f_range,
                           params.nfft, reference=reference,
                           error_alphas=err_alphas)

    band_ref = max_coeff_distribution(reference, alphas[0], list(params.bands),
                                      params.nfft)
    band_gen = max_coeff_distribution(generated, alphas[0], list(params.bands),
                                      params.nfft)
    band_error = float(np.sum(np.abs(band_gen - band_ref)))

    e_ref = np.delete(f_ref, 6, axis=1)
    e_gen = np.delete(f_gen, 6, axis=1)
    if params.fid_space == "features":
        stats = (e_ref.mean(axis=0), e_ref.std(axis=0))
        fid_value = fid(standardize(e_ref, stats), standardize(e_gen, stats))
        pca = pca_fit(e_ref)
    else:
        pca = pca_fit(e_ref)
        fid_value = fid(pca_project(pca, e_ref), pca_project(pca, e_gen))
    scores = {
        "reference": pca_project(pca, e_ref, k=2),
        "generated": pca_project(pca, e_gen, k=2),
    }
    return EvalReport(params, feature_stats, exc,
                      {"reference": band_ref, "generated": band_gen},
                      band_error, fid_value, scores,
                      labels=(reference.name or "reference",
                              generated.name or "generated"))


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_report(report: EvalReport, outdir, plots: bool = False) -> list[str]:
    """Write the CSV tables (and optional PNGs) into ``outdir``.

    Returns the list of files written (relative names).
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    rows = []
    for i, name in enumerate(FEATURE_NAMES):
        ref = report.feature_stats["reference"][:, i]
        gen = report.feature_stats["generated"][:, i]
        rows.append([f"({i + 1})", name,
                     *(f"{v:.6g}" for v in ref), *(f"{v:.6g}" for v in gen)])
    _write_rows(out / "features.csv",
                ["feature", "name", "ref_mean", "ref_std", "ref_median",
                 "gen_mean", "gen_std", "gen_median"], rows)
    written.append("features.csv")

    exc = report.exceedance
    rows = [[f"{a:g}", f"{p:.2f}", f"{r:.4f}",
             "" if exc.ref_pct is None else f"{exc.ref_pct[i]:.4f}"]
            for i, (a, p, r) in enumerate(zip(exc.alphas, exc.pct, exc.raw_pct))]
    rows.append(["Error", f"{exc.error:.2f}" if exc.error is not None else "", "", ""])
    _write_rows(out / "exceedance.csv",
                ["alpha_hz", "pct_vs_reference", "raw_pct", "ref_raw_pct"], rows)
    written.append("exceedance.csv")

    rows = [[f"{lo:g}-{hi:g}",
             f"{report.band_pct['reference'][i]:.2f}",
             f"{report.band_pct['generated'][i]:.2f}"]
            for i, (lo, hi) in enumerate(report.params.bands)]
    rows.append(["Error", "", f"{report.band_error:.2f}"])
    _write_rows(out / "bands.csv", ["band_hz", "reference_pct", "generated_pct"], rows)
    written.append("bands.csv")

    _write_rows(out / "fid.csv", ["space", "fid"],
                [[report.params.fid_space, f"{report.fid_value:.9g}"]])
    written.append("fid.csv")

    rows = []
    for label in ("reference", "generated"):
        for pc1, pc2 in report.pca_scores[label]:
            rows.append([label, f"{pc1:.6g}", f"{pc2:.6g}"])
    _write_rows(out / "pca_scatter.csv", ["set", "pc1", "pc2"], rows)
    written.append("pca_scatter.csv")

    if plots:
        written += _write_plots(report, out)
    return written


def _write_plots(report: EvalReport, out: Path) -> list[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    for label, marker in (("reference", "o"), ("generated", "x")):
        pts = report.pca_scores[label]
        ax.scatter(pts[:, 0], pts[:, 1], s=8, marker=marker, alpha=0.5, label=label)
    ax.set_xlabel("PC 1")
    ax.set_ylabel("PC 2")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "pca_scatter.png", dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 3))
    exc = report.exceedance
    ax.bar(np.arange(exc.alphas.size), exc.raw_pct, width=0.6)
    ax.set_xticks(np.arange(exc.alphas.size),
                  [f"{a:g}" for a in exc.alphas])
    ax.set_xlabel("cyclic frequency [Hz]")
    ax.set_ylabel("exceedance [%]")
    fig.tight_layout()
    fig.savefig(out / "exceedance.png", dpi=120)
    plt.close(fig)
    return ["pca_scatter.png", "exceedance.png"]


def write_diagnostic_plots(reference: TraceSet, generated: TraceSet,
                           params: EvalParams, outdir) -> list[str]:
    """Spectrogram and |CSC| heatmap of the first trace of each set."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .cyclic import csc as _csc
    from .cyclic import csd as _csd

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    alphas = harmonic_alphas(params.fundamental_hz, params.n_harmonics)
    for label, ts in (("reference", reference), ("generated", generated)):
        tr = ts.trace(0)
        win = min(params.nfft, tr.samples.size // 8)
        mag, freqs, times = spectrogram(tr, win, win // 2)
        fig, ax = plt.subplots(figsize=(6, 3))
        db = 20 * np.log10(mag.T + 1e-12)
        ax.pcolormesh(times * 1e3, freqs / 1e3, db, shading="auto")
        ax.set_xlabel("time [ms]")
        ax.set_ylabel("frequency [kHz]")
        ax.set_title(f"{label}: spectrogram [dB]")
        fig.tight_layout()
        name = f"spectrogram_{label}.png"
        fig.savefig(out / name, dpi=120)
        plt.close(fig)
        written.append(name)

        sp = _csc(_csd(tr, np.concatenate([[0.0], alphas]), params.nfft))
        fig, ax = plt.subplots(figsize=(6, 3))
        ax.pcolormesh(sp.freqs / 1e3, np.concatenate([[0.0], alphas]),
                      np.abs(sp.csc), shading="auto", vmin=0, vmax=1)
        ax.set_xlabel("spectral frequency [kHz]")
        ax.set_ylabel("cyclic frequency [Hz]")
        ax.set_title(f"{label}: |coherence|")
        fig.tight_layout()
        name = f"csc_{label}.png"
        fig.savefig(out / name, dpi=120)
        plt.close(fig)
        written.append(name)
    return written


def spectrogram_csv(trace, win_len: int, hop: int, path) -> None:
    """STFT magnitude of one trace as CSV (rows = frames, cols = bins)."""
    mag, freqs, times = spectrogram(trace, win_len, hop)
    header = ["time_s"] + [f"{f:g}" for f in freqs]
    rows = [[f"{t:.6g}", *(f"{v:.6g}" for v in row)] for t, row in zip(times, mag)]
    _write_rows(Path(path), header, rows)
