"""Cyclic spectral density / coherence estimation and derived statistics.

Default estimator: the averaged cyclic periodogram. The trace is cut into
50%-overlapping Hann-windowed segments of ``nfft`` samples; for each cyclic
frequency alpha the trace is modulated by exp(-2j pi alpha n / fs) (global
sample index, so segment contributions stay phase-coherent), and

    csd(alpha; f) = < X(f) * conj(X_mod(f)) >_segments / (fs * sum(w^2))

which estimates the correlation of X(f) with X(f + alpha). At alpha = 0
this is exactly the Welch PSD estimate. The coherence normalizes by the
PSDs at f and f + alpha,

    csc(alpha; f) = csd(alpha; f) / sqrt(psd(f) * psd(f + alpha)),

where psd(f + alpha) is estimated from the modulated signal on the same
segments, so |csc| <= 1 holds by Cauchy-Schwarz (up to rounding) and the
alpha = 0 row is exactly 1. Bins whose PSD factors fall below 1e-12 of the
peak PSD are masked out of all statistics.

``direct_csd`` is the slow oracle: it evaluates the cyclic autocorrelation
by explicit cycle-synchronized averaging and transforms it over lag with
the lag taper implied by the windowed segment estimator (the normalized
window autocorrelation), so the two estimators agree on exactly periodic
inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    EmptyRangeError,
    InvalidParamError,
    LengthError,
    ResolutionError,
)
from .traces import NoiseTrace, TraceSet

__all__ = [
    "CyclicSpectrum",
    "csd",
    "csc",
    "direct_csd",
    "ExceedanceResult",
    "exceedance_stats",
    "max_coeff_distribution",
    "spectrogram",
    "harmonic_alphas",
]

_MASK_REL = 1e-12


def _hann(n: int) -> np.ndarray:
    """Periodic Hann window (matches Welch-style spectral estimation)."""
    return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)


def harmonic_alphas(fundamental_hz: float, count: int = 6) -> np.ndarray:
    """The first ``count`` harmonics of the cycle frequency."""
    return fundamental_hz * np.arange(1, count + 1)


@dataclass(frozen=True)
class CyclicSpectrum:
    """CSD/CSC values on a one-sided spectral grid.

    csd[a, f] pairs spectral bins (f, f + alphas[a]); psd is the alpha = 0
    Welch row; psd_shifted[a, f] estimates psd(f + alphas[a]); mask flags
    bins whose coherence is defined. csc is None until `csc` fills it.
    """

    alphas: np.ndarray
    freqs: np.ndarray
    csd: np.ndarray
    psd: np.ndarray
    psd_shifted: np.ndarray
    mask: np.ndarray
    sample_rate_hz: float
    nfft: int
    csc: np.ndarray | None = None

    @property
    def masked_bins(self) -> int:
        return int(self.mask.size - np.count_nonzero(self.mask))


def _segment_matrix(x: np.ndarray, nfft: int) -> tuple[np.ndarray, np.ndarray]:
    hop = nfft // 2
    starts = np.arange(0, x.size - nfft + 1, hop)
    idx = starts[:, None] + np.arange(nfft)[None, :]
    return idx, starts


def csd(trace: NoiseTrace, alphas, nfft: int, window: str = "hann") -> CyclicSpectrum:
    """Averaged cyclic periodogram of one trace at the given alphas (Hz).

    Requires trace length >= 2 * nfft and every nonzero alpha at least one
    segment-duration resolution cell (fs / nfft) and below fs / 2.
    """
    x = trace.samples64()
    fs = trace.sample_rate_hz
    alphas = np.atleast_1d(np.asarray(alphas, dtype=np.float64))
    if x.size < 2 * nfft:
        raise LengthError(f"trace length {x.size} < 2 * nfft ({2 * nfft})")
    res = fs / nfft
    for a in alphas:
        if a < 0 or a >= fs / 2:
            raise ResolutionError(f"alpha {a} Hz outside [0, fs/2)")
        if a != 0 and a < res:
            raise ResolutionError(
                f"alpha {a} Hz below the segment resolution {res:.6g} Hz"
            )
    if window == "hann":
        w = _hann(nfft)
    elif window == "boxcar":
        w = np.ones(nfft)
    else:
        raise InvalidParamError(f"unknown window {window!r}")

    idx, _ = _segment_matrix(x, nfft)
    scale = fs * np.sum(w**2) * idx.shape[0]
    u = np.fft.fft(x[idx] * w, axis=1)
    n_onesided = nfft // 2 + 1
    freqs = np.arange(n_onesided) * (fs / nfft)
    psd = np.sum(u * np.conj(u), axis=0).real[:n_onesided] / scale

    csd_rows = np.empty((alphas.size, n_onesided), dtype=np.complex128)
    shift_rows = np.empty((alphas.size, n_onesided), dtype=np.float64)
    t = np.arange(x.size)
    for i, a in enumerate(alphas):
        if a == 0:
            v = u
        else:
            mod = x * np.exp(-2j * np.pi * a * t / fs)
            v = np.fft.fft(mod[idx] * w, axis=1)
        csd_rows[i] = np.sum(u * np.conj(v), axis=0)[:n_onesided] / scale
        shift_rows[i] = np.sum(v * np.conj(v), axis=0).real[:n_onesided] / scale

    thr = _MASK_REL * psd.max() if psd.max() > 0 else np.inf
    mask = (psd[None, :] >= thr) & (shift_rows >= thr)
    return CyclicSpectrum(alphas, freqs, csd_rows, psd, shift_rows, mask,
                          fs, int(nfft))


def csc(spectrum: CyclicSpectrum) -> CyclicSpectrum:
    """Fill the coherence: csd / sqrt(psd(f) * psd(f + alpha)) on valid bins.

    Masked bins get 0 and stay flagged invalid. The alpha = 0 row is
    exactly 1 on unmasked bins.
    """
    denom = np.sqrt(spectrum.psd[None, :] * spectrum.psd_shifted)
    values = np.zeros_like(spectrum.csd)
    np.divide(spectrum.csd, denom, out=values, where=spectrum.mask)
    # S(0;f)/sqrt(S(0;f)^2) is identically 1; pin it against ulp rounding
    zero_rows = spectrum.alphas == 0.0
    if zero_rows.any():
        values[zero_rows] = np.where(spectrum.mask[zero_rows], 1.0, 0.0)
    return replace(spectrum, csc=values)


def direct_csd(trace: NoiseTrace, fundamental_hz: float, alphas,
               nfft: int, window: str = "hann") -> tuple[np.ndarray, np.ndarray]:
    """Literal double-sum evaluation of the cyclic spectrum (slow oracle).

    The time-varying autocorrelation r[n; tau] is estimated by averaging
    x[n + m P] * x[n + m P + tau] over cycle-aligned frames with
    P = round(fs / fundamental_hz); its discrete Fourier series over n at
    each alpha gives the cyclic autocorrelation, which is transformed over
    lag with the segment estimator's implied lag taper (the normalized
    window autocorrelation) and 1/fs density scaling. Returns
    (freqs, csd matrix) on the same one-sided grid as `csd`.
    """
    x = trace.samples64()
    fs = trace.sample_rate_hz
    alphas = np.atleast_1d(np.asarray(alphas, dtype=np.float64))
    p = int(round(fs / fundamental_hz))
    if p < 2 or x.size < 2 * p:
        raise LengthError("need at least two cycles for cycle-aligned averaging")

    lags = np.arange(-(nfft - 1), nfft)
    r_nt = np.zeros((p, lags.size))
    for j, tau in enumerate(lags):
        for n in range(p):
            starts = np.arange(n, x.size, p)
            starts = starts[(starts + tau >= 0) & (starts + tau < x.size)]
            if starts.size:
                r_nt[n, j] = np.mean(x[starts] * x[starts + tau])

    w = _hann(nfft) if window == "hann" else np.ones(nfft)
    acf_w = np.correlate(w, w, mode="full") / np.sum(w**2)  # lag -(nfft-1)..nfft-1

    n_grid = np.arange(p)
    n_onesided = nfft // 2 + 1
    freqs = np.arange(n_onesided) * (fs / nfft)
    out = np.empty((alphas.size, n_onesided), dtype=np.complex128)
    for i, a in enumerate(alphas):
        # e^{+j...} matches the estimator's (f, f + alpha) bin pairing
        caf = (np.exp(+2j * np.pi * a * n_grid / fs) @ r_nt) / p
        kernel = np.exp(-2j * np.pi * np.outer(freqs, lags) / fs)
        out[i] = kernel @ (caf * acf_w) / fs
    return freqs, out


@dataclass(frozen=True)
class ExceedanceResult:
    """Per-alpha |CSC| exceedance percentages and the table 'Error' row.

    pct is what a report shows: the raw percentage of in-band bins above
    the threshold, or -- when a reference set was supplied -- the ratio to
    the reference set's exceedance, times 100. error sums |pct - 100| over
    ``error_alphas`` (reference runs only).
    """

    alphas: np.ndarray
    pct: np.ndarray
    raw_pct: np.ndarray
    ref_pct: np.ndarray | None = None
    error: float | None = None


def _exceedance_fractions(ts: TraceSet, alphas, thresh: float,
                          band: np.ndarray, nfft: int) -> np.ndarray:
    per_trace = np.full((len(ts), len(alphas)), np.nan)
    for i, tr in enumerate(ts):
        sp = csc(csd(tr, alphas, nfft))
        valid = sp.mask & band[None, :]
        counts = valid.sum(axis=1)
        hits = (np.abs(sp.csc) > thresh) & valid
        rows = counts > 0
        per_trace[i, rows] = hits.sum(axis=1)[rows] / counts[rows]
    return np.nanmean(per_trace, axis=0)


def exceedance_stats(ts: TraceSet, alphas, thresh: float,
                     f_range: tuple[float, float], nfft: int,
                     reference: TraceSet | None = None,
                     error_alphas=None) -> ExceedanceResult:
    """Fraction of in-band bins with |CSC| above ``thresh``, per alpha.

    Fractions are averaged over traces and reported as percentages. With a
    ``reference`` set the percentages are normalized to the reference's
    fractions (100 = identical exceedance) and the aggregate error row sums
    |pct - 100| over ``error_alphas`` (all alphas by default).
    """
    if not 0 < thresh < 1:
        raise InvalidParamError(f"thresh must be in (0, 1), got {thresh}")
    alphas = np.atleast_1d(np.asarray(alphas, dtype=np.float64))
    lo, hi = f_range
    probe = csd(ts.trace(0), [], nfft)
    band = (probe.freqs >= lo) & (probe.freqs < hi)
    if not band.any():
        raise EmptyRangeError(f"f_range {f_range} selects no bins at nfft {nfft}")

    frac = _exceedance_fractions(ts, alphas, thresh, band, nfft)
    raw_pct = 100.0 * frac
    if reference is None:
        return ExceedanceResult(alphas, raw_pct, raw_pct)

    ref_frac = _exceedance_fractions(reference, alphas, thresh, band, nfft)
    pct = np.full_like(raw_pct, np.nan)
    same = frac == ref_frac
    pct[same] = 100.0
    ok = ~same & (ref_frac > 0)
    pct[ok] = 100.0 * frac[ok] / ref_frac[ok]
    if error_alphas is None:
        err_sel = np.ones(alphas.size, dtype=bool)
    else:
        err_sel = np.isin(alphas, np.atleast_1d(error_alphas))
    error = float(np.sum(np.abs(pct[err_sel] - 100.0)))
    return ExceedanceResult(alphas, pct, raw_pct, 100.0 * ref_frac, error)


def max_coeff_distribution(ts: TraceSet, alpha: float,
                           bands: list[tuple[float, float]],
                           nfft: int) -> np.ndarray:
    """Where each trace's peak |CSC(alpha; f)| lands, as band percentages.

    Bands are half-open [lo, hi), must ascend without overlap, and jointly
    define the analyzed range. Percentages over all traces sum to 100.
    """
    edges = np.asarray(bands, dtype=np.float64)
    if edges.ndim != 2 or edges.shape[1] != 2 or np.any(edges[:, 0] >= edges[:, 1]):
        raise EmptyRangeError("bands must be nonempty (lo, hi) intervals")
    if np.any(edges[1:, 0] < edges[:-1, 1]):
        raise EmptyRangeError("bands must ascend without overlap")
    lo, hi = edges[0, 0], edges[-1, 1]
    probe = csd(ts.trace(0), [alpha], nfft)
    in_range = (probe.freqs >= lo) & (probe.freqs < hi)
    if not in_range.any():
        raise EmptyRangeError("analyzed range selects no bins")

    counts = np.zeros(len(bands), dtype=np.int64)
    total = 0
    for tr in ts:
        sp = csc(csd(tr, [alpha], nfft))
        mag = np.abs(sp.csc[0])
        mag[~sp.mask[0] | ~in_range] = -1.0
        if mag.max() < 0:
            continue
        f_peak = sp.freqs[int(np.argmax(mag))]
        for b, (blo, bhi) in enumerate(bands):
            if blo <= f_peak < bhi:
                counts[b] += 1
                break
        total += 1
    if total == 0:
        raise EmptyRangeError("every trace was fully masked in the analyzed range")
    return 100.0 * counts / total


def spectrogram(trace: NoiseTrace, win_len: int,
                hop: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hann-windowed STFT magnitude.

    Returns (mag, freqs, times): mag[t, f] = |FFT(w * frame_t)| over full
    frames only (no padding); freqs on the one-sided grid, times at frame
    centers.
    """
    x = trace.samples64()
    if win_len > x.size:
        raise LengthError(f"win_len {win_len} exceeds trace length {x.size}")
    if hop < 1:
        raise InvalidParamError("hop must be >= 1")
    w = _hann(win_len)
    starts = np.arange(0, x.size - win_len + 1, hop)
    frames = x[starts[:, None] + np.arange(win_len)[None, :]]
    mag = np.abs(np.fft.rfft(frames * w, axis=1))
    freqs = np.fft.rfftfreq(win_len, d=1.0 / trace.sample_rate_hz)
    times = (starts + win_len / 2) / trace.sample_rate_hz
    return mag, freqs, times
