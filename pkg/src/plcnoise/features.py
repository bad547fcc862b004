"""Per-trace statistical features, PCA, and the Fréchet distance.

The nine trace statistics: maximum sample, mean, energy (mean square),
standard deviation (1/(N-1)), skewness and kurtosis (1/N central-moment
ratios; kurtosis is non-excess, 3 for a Gaussian), threshold peak count,
and the skewness/kurtosis of the normalized autocorrelation sequence
r_k = c_k / c_0 over lags k = 1..N-1 with

    c_k = (1/N) * sum_{n}(s[n] - mu)(s[n + k] - mu).

PCA and the Fréchet distance operate on the 8-feature matrix that excludes
the peak count. Covariances use 1/(n-1) normalization so the distance is
scale-consistent. ``fid`` itself performs no standardization -- callers
that want the default z-scored feature space standardize first (see
``standardize``), which also keeps fid symmetric in its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, NumericsError, RankError, ShapeError
from .traces import NoiseTrace, TraceSet

__all__ = [
    "FeatureVector",
    "FEATURE_NAMES",
    "feature_vector",
    "autocorr",
    "feature_matrix",
    "feature_matrix8",
    "standardize",
    "PcaModel",
    "pca_fit",
    "pca_project",
    "fid",
]

FEATURE_NAMES = (
    "max_v",
    "mean_v",
    "energy",
    "std_dev",
    "skewness",
    "kurtosis",
    "peak_count",
    "acf_skewness",
    "acf_kurtosis",
)


@dataclass(frozen=True)
class FeatureVector:
    """The nine per-trace statistics plus the peak threshold used."""

    max_v: float
    mean_v: float
    energy: float
    std_dev: float
    skewness: float
    kurtosis: float
    peak_count_over_thresh: int
    acf_skewness: float
    acf_kurtosis: float
    thresh_volts: float = 0.05

    def as_array(self) -> np.ndarray:
        return np.array([
            self.max_v, self.mean_v, self.energy, self.std_dev,
            self.skewness, self.kurtosis, float(self.peak_count_over_thresh),
            self.acf_skewness, self.acf_kurtosis,
        ])


def _moment_ratios(x: np.ndarray) -> tuple[float, float]:
    """Population (1/N) skewness and non-excess kurtosis of a sequence."""
    d = x - x.mean()
    m2 = np.mean(d**2)
    if m2 == 0:
        raise DegenerateInputError("zero variance; moment ratios undefined")
    m3 = np.mean(d**3)
    m4 = np.mean(d**4)
    return float(m3 / m2**1.5), float(m4 / m2**2)


def autocorr(trace: NoiseTrace | np.ndarray) -> np.ndarray:
    """Normalized autocorrelation r_k over lags 0..N-1 (r_0 = 1).

    Mean-removed, 1/N-normalized covariances; computed with an FFT so long
    traces stay cheap. Raises DegenerateInputError on constant input.
    """
    s = trace.samples64() if isinstance(trace, NoiseTrace) else np.asarray(trace, np.float64)
    n = s.size
    d = s - s.mean()
    if not np.any(d):
        raise DegenerateInputError("constant trace has no autocorrelation")
    spec = np.fft.rfft(d, 2 * n)
    c = np.fft.irfft(spec * np.conj(spec), 2 * n)[:n] / n
    return c / c[0]


def feature_vector(trace: NoiseTrace, thresh: float = 0.05) -> FeatureVector:
    """All nine statistics of one trace; needs length >= 4 and nonzero variance."""
    s = trace.samples64()
    n = s.size
    if n < 4:
        raise ShapeError(f"trace too short for moment features: {n} < 4")
    mu = float(s.mean())
    d = s - mu
    var_pop = float(np.mean(d**2))
    if var_pop == 0:
        raise DegenerateInputError("constant trace; feature moments undefined")
    skew, kurt = _moment_ratios(s)
    r = autocorr(trace)
    acf_skew, acf_kurt = _moment_ratios(r[1:])
    return FeatureVector(
        max_v=float(s.max()),
        mean_v=mu,
        energy=float(np.mean(s**2)),
        std_dev=float(np.sqrt(np.sum(d**2) / (n - 1))),
        skewness=skew,
        kurtosis=kurt,
        peak_count_over_thresh=int(np.count_nonzero(np.abs(s) > thresh)),
        acf_skewness=acf_skew,
        acf_kurtosis=acf_kurt,
        thresh_volts=float(thresh),
    )


def feature_matrix(ts: TraceSet, thresh: float = 0.05) -> np.ndarray:
    """(n_traces, 9) matrix of features in FEATURE_NAMES order."""
    return np.stack([feature_vector(t, thresh).as_array() for t in ts])


def feature_matrix8(ts: TraceSet, thresh: float = 0.05) -> np.ndarray:
    """(n_traces, 8) matrix excluding the peak count (PCA/FID feature set)."""
    full = feature_matrix(ts, thresh)
    return np.delete(full, 6, axis=1)


def standardize(feats: np.ndarray,
                stats: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    """z-score ``feats`` by reference (mean, std); zero stds pass through."""
    mean, std = stats
    std = np.where(std < 1e-12, 1.0, std)
    return (np.asarray(feats, np.float64) - mean) / std


@dataclass(frozen=True)
class PcaModel:
    """Feature means, orthonormal eigenvector columns, descending eigenvalues."""

    feature_means: np.ndarray
    eigenvectors: np.ndarray
    eigenvalues: np.ndarray


def pca_fit(feats: np.ndarray) -> PcaModel:
    """Eigendecomposition of the 1/(n-1) feature covariance.

    Needs n >= n_features + 1 rows of finite values. Rank-deficient inputs
    are fine (zero eigenvalues); RankError only if the covariance itself is
    non-finite.
    """
    a = np.asarray(feats, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < a.shape[1] + 1:
        raise ShapeError(
            f"need at least n_features+1 rows, got shape {a.shape}"
        )
    if not np.all(np.isfinite(a)):
        raise RankError("features contain non-finite values")
    means = a.mean(axis=0)
    centered = a - means
    cov = centered.T @ centered / (a.shape[0] - 1)
    if not np.all(np.isfinite(cov)):
        raise RankError("covariance is non-finite")
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    # deterministic sign: largest-magnitude component of each axis positive
    flip = np.sign(evecs[np.argmax(np.abs(evecs), axis=0), np.arange(evecs.shape[1])])
    flip[flip == 0] = 1.0
    return PcaModel(means, evecs * flip, evals)


def pca_project(model: PcaModel, feats: np.ndarray, k: int | None = None) -> np.ndarray:
    """Scores of ``feats`` on the first k principal axes (all by default)."""
    a = np.asarray(feats, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != model.feature_means.size:
        raise ShapeError(f"features must be (n, {model.feature_means.size})")
    scores = (a - model.feature_means) @ model.eigenvectors
    return scores if k is None else scores[:, :k]


def _sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition."""
    sym = (mat + mat.T) / 2
    evals, evecs = np.linalg.eigh(sym)
    return (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T


def fid(x_feats: np.ndarray, g_feats: np.ndarray) -> float:
    """Fréchet distance between Gaussian fits of two feature samples.

    ||mu_x - mu_g||^2 + Tr(Sigma_x + Sigma_g - 2 (Sigma_x Sigma_g)^{1/2}),
    with the matrix square root evaluated through the eigendecomposition of
    the symmetrized product sqrt(Sigma_x) Sigma_g sqrt(Sigma_x). Symmetric
    in its arguments and >= 0 up to a tolerated 1e-8 numerical residue.
    """
    x = np.asarray(x_feats, dtype=np.float64)
    g = np.asarray(g_feats, dtype=np.float64)
    if x.ndim != 2 or g.ndim != 2 or x.shape[1] != g.shape[1]:
        raise ShapeError("feature matrices must be 2-D with equal column counts")
    if x.shape[0] < 9 or g.shape[0] < 9:
        raise ShapeError("need at least 9 samples per set for covariance estimates")
    mu_x, mu_g = x.mean(axis=0), g.mean(axis=0)
    cx = np.cov(x, rowvar=False).reshape(x.shape[1], x.shape[1])
    cg = np.cov(g, rowvar=False).reshape(g.shape[1], g.shape[1])
    try:
        root = _sqrtm_psd(cx)
        inner = root @ cg @ root
        evals = np.linalg.eigvalsh((inner + inner.T) / 2)
    except np.linalg.LinAlgError as exc:
        raise NumericsError(f"matrix square root failed: {exc}") from exc
    tr_sqrt = float(np.sum(np.sqrt(np.clip(evals, 0.0, None))))
    value = float(np.sum((mu_x - mu_g) ** 2) + np.trace(cx) + np.trace(cg) - 2 * tr_sqrt)
    if value < -1e-8:
        raise NumericsError(f"distance {value} below the -1e-8 numerical tolerance")
    return max(value, 0.0)
