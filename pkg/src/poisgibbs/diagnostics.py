"""Figures of merit and uncertainty products for completed chains.

Credible products use central (equal-tailed) intervals, which are
rank-exact on stored samples; the per-pixel "coverage level" is the
smallest central level whose interval contains the truth.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterDomainError


@dataclass
class MetricsReport:
    psnr_db: float
    ssim: float
    peak: float
    per_channel: list = field(default_factory=list)
    lpips: None = None  # perceptual metric intentionally absent (neural)


@dataclass
class CoverageMap:
    levels: np.ndarray


@dataclass
class CalibrationCurve:
    targets: np.ndarray
    achieved: np.ndarray


def psnr(ref, est, peak):
    """10 log10(peak^2 / MSE); +inf on an exact match."""
    ref = np.asarray(ref, dtype=np.float64)
    est = np.asarray(est, dtype=np.float64)
    if ref.shape != est.shape:
        raise ParameterDomainError("psnr needs equal shapes")
    if not peak > 0:
        raise ParameterDomainError("peak must be > 0")
    mse = float(np.mean((ref - est) ** 2))
    if mse == 0.0:
        return np.inf
    return 10.0 * np.log10(peak * peak / mse)


def ssim(ref, est, peak, window=8):
    """Mean local structural similarity over a square moving window.

    Population moments per window, stabilizers c1 = (0.01 peak)^2 and
    c2 = (0.03 peak)^2.
    """
    ref = np.asarray(ref, dtype=np.float64)
    est = np.asarray(est, dtype=np.float64)
    if ref.shape != est.shape:
        raise ParameterDomainError("ssim needs equal shapes")
    if ref.ndim != 2 or min(ref.shape) < window:
        raise ParameterDomainError(f"ssim needs a 2-D image of at least {window}x{window}")
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    nw = window * window

    def win_sums(img):
        c = np.cumsum(np.cumsum(img, axis=0), axis=1)
        c = np.pad(c, ((1, 0), (1, 0)))
        return (c[window:, window:] - c[:-window, window:]
                - c[window:, :-window] + c[:-window, :-window])

    mx = win_sums(ref) / nw
    my = win_sums(est) / nw
    vx = win_sums(ref * ref) / nw - mx * mx
    vy = win_sums(est * est) / nw - my * my
    cov = win_sums(ref * est) / nw - mx * my
    num = (2 * mx * my + c1) * (2 * cov + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def acf(trace, max_lag):
    """Biased sample autocorrelation, acf[0] = 1."""
    trace = np.asarray(trace, dtype=np.float64)
    if max_lag < 1 or trace.size <= max_lag + 1:
        raise ParameterDomainError("need trace length > max_lag + 1")
    centered = trace - trace.mean()
    denom = float(np.dot(centered, centered))
    if denom == 0.0:
        raise ParameterDomainError("constant trace has undefined autocorrelation")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = float(np.dot(centered[:-k], centered[k:])) / denom
    return out


def coverage_map(thinned, truth, min_samples=50):
    """Per-pixel minimal central credible level containing the truth.

    With F the empirical CDF rank of the truth among the samples, the
    level is |2F - 1|: 0 at the sample median, 1 outside the sample range.
    """
    thinned = np.asarray(thinned, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if thinned.ndim != 2 or thinned.shape[1] != truth.size:
        raise ParameterDomainError("need a (samples x pixels) matrix matching truth")
    if thinned.shape[0] < min_samples:
        raise ParameterDomainError(
            f"need at least {min_samples} stored samples, have {thinned.shape[0]}")
    frac = (thinned <= truth[None, :]).mean(axis=0)
    return CoverageMap(np.abs(2.0 * frac - 1.0))


def calibration_curve(thinned, truth, targets):
    """Fraction of pixels whose coverage level is within each target."""
    cov = coverage_map(thinned, truth)
    targets = np.asarray(targets, dtype=np.float64)
    achieved = np.array([(cov.levels <= c).mean() for c in targets])
    return CalibrationCurve(targets, achieved)
