"""Score-based priors for the mirror Langevin step.

Every prior exposes ``value(x)`` (the potential g, used by traces and
finite-difference audits) and ``score(x)`` (its gradient, WITHOUT the
regularization weight beta -- the potential assembly applies beta exactly
once).  Built-ins are analytic; denoiser-driven regularization uses the
``x - D(x)`` score over a Denoiser contract, with linear smoothing
denoisers shipped and an out-of-process hook for external ones.
"""

import os
import shutil
import struct
import subprocess
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError, ParameterDomainError


def _check_positive(x):
    x = np.asarray(x, dtype=np.float64)
    if not (x > 0).all():
        raise DomainError("prior scores are defined on strictly positive vectors")
    return x


def _check_finite(v, what):
    if not np.isfinite(v).all():
        bad = np.flatnonzero(~np.isfinite(np.atleast_1d(v)))
        raise NumericalError(f"non-finite {what} at indices {bad[:8].tolist()}")
    return v


class ScorePrior:
    """Contract: beta weight plus value/score on the positive orthant."""

    def __init__(self, beta=1.0, descriptor=""):
        if beta <= 0:
            raise ParameterDomainError("beta must be > 0")
        self.beta = float(beta)
        self.descriptor = descriptor

    def value(self, x, burnin=False):
        raise NotImplementedError

    def score(self, x, burnin=False):
        raise NotImplementedError


class FlatPrior(ScorePrior):
    """g == 0; the likelihood-only reference configuration."""

    def __init__(self, beta=1.0):
        super().__init__(beta, "flat")

    def value(self, x, burnin=False):
        _check_positive(x)
        return 0.0

    def score(self, x, burnin=False):
        x = _check_positive(x)
        return np.zeros_like(x)


class TikhonovPrior(ScorePrior):
    """g(x) = ||x - center||^2 / 2."""

    def __init__(self, beta=1.0, center=0.0):
        super().__init__(beta, "tikhonov")
        self.center = center

    def value(self, x, burnin=False):
        x = _check_positive(x)
        d = x - self.center
        return float(0.5 * np.dot(d, d))

    def score(self, x, burnin=False):
        x = _check_positive(x)
        return _check_finite(x - self.center, "tikhonov score")


class SmoothedTVPrior(ScorePrior):
    """Isotropic total variation smoothed by eps, periodic differences.

    g(img) = sum over pixels of sqrt(dh^2 + dv^2 + eps^2) with forward
    differences; the score is the exact gradient of that sum.
    """

    def __init__(self, beta, epsilon, image_shape):
        super().__init__(beta, "smoothed-tv")
        if epsilon <= 0:
            raise ParameterDomainError("epsilon must be > 0")
        self.epsilon = float(epsilon)
        self.image_shape = tuple(int(v) for v in image_shape)

    def _diffs(self, img):
        dh = np.roll(img, -1, axis=1) - img
        dv = np.roll(img, -1, axis=0) - img
        mag = np.sqrt(dh * dh + dv * dv + self.epsilon ** 2)
        return dh, dv, mag

    def value(self, x, burnin=False):
        img = _check_positive(x).reshape(self.image_shape)
        return float(self._diffs(img)[2].sum())

    def score(self, x, burnin=False):
        x = _check_positive(x)
        img = x.reshape(self.image_shape)
        dh, dv, mag = self._diffs(img)
        ph = dh / mag
        pv = dv / mag
        grad = (np.roll(ph, 1, axis=1) - ph) + (np.roll(pv, 1, axis=0) - pv)
        return _check_finite(grad.ravel(), "tv score")


class Denoiser:
    """Contract: same-length nonneg -> nonneg map with a declared
    Lipschitz bound; `strength` is the denoising strength knob."""

    strength = 0.0
    lipschitz = 1.0

    def __call__(self, x):
        raise NotImplementedError


class IdentityDenoiser(Denoiser):
    def __init__(self):
        self.strength = 0.0
        self.lipschitz = 1.0

    def __call__(self, x):
        return np.asarray(x, dtype=np.float64).copy()


class BlurDenoiser(Denoiser):
    """Periodic Gaussian smoothing; linear, symmetric, unit-mass kernel.

    Symmetric circulant with nonnegative mass-1 taps, so the spectral
    radius is 1 and lipschitz = 1 is tight.
    """

    def __init__(self, strength, image_shape, truncate=4.0):
        if strength <= 0:
            raise ParameterDomainError("strength must be > 0")
        self.strength = float(strength)
        self.image_shape = tuple(int(v) for v in image_shape)
        self.lipschitz = 1.0
        size = max(3, int(2 * truncate * strength + 1))
        ax = np.arange(size) - (size - 1) / 2.0
        g = np.exp(-0.5 * (ax / strength) ** 2)
        self._taps = g / g.sum()

    def __call__(self, x):
        img = np.asarray(x, dtype=np.float64).reshape(self.image_shape)
        k = self._taps.size // 2
        out = np.zeros_like(img)
        for off, w in zip(range(-k, k + 1), self._taps):
            out += w * np.roll(img, off, axis=0)
        out2 = np.zeros_like(img)
        for off, w in zip(range(-k, k + 1), self._taps):
            out2 += w * np.roll(out, off, axis=1)
        return out2.ravel()


def red_score(denoiser, x):
    """Denoiser-residual score x - D(x)."""
    x = np.asarray(x, dtype=np.float64)
    return x - denoiser(x)


class REDPrior(ScorePrior):
    """g(x) = x^T (x - D(x)) / 2 with score x - D(x).

    Assumes the denoiser is locally homogeneous with symmetric Jacobian;
    that property is NOT verified for external denoisers.  A per-phase
    strength schedule switches denoisers between burn-in and estimation.
    """

    def __init__(self, beta, denoiser, burnin_denoiser=None):
        super().__init__(beta, "red")
        self.denoiser = denoiser
        self.burnin_denoiser = burnin_denoiser or denoiser

    def _pick(self, burnin):
        return self.burnin_denoiser if burnin else self.denoiser

    def value(self, x, burnin=False):
        x = _check_positive(x)
        return float(0.5 * np.dot(x, x - self._pick(burnin)(x)))

    def score(self, x, burnin=False):
        x = _check_positive(x)
        return _check_finite(red_score(self._pick(burnin), x), "red score")


class ExternalDenoiser(Denoiser):
    """Out-of-process denoiser: raw image file in, raw image file out.

    Protocol: the command is invoked as ``cmd <input> <output>``; both
    files are little-endian float32 row-major arrays preceded by two
    uint32 dims (height, width).  Nonzero exit or timeout is an error.
    """

    def __init__(self, command, image_shape, strength=1.0, lipschitz=1.0,
                 timeout=30.0):
        self.command = list(command)
        self.image_shape = tuple(int(v) for v in image_shape)
        self.strength = float(strength)
        self.lipschitz = float(lipschitz)
        self.timeout = float(timeout)

    def __call__(self, x):
        img = np.asarray(x, dtype=np.float64).reshape(self.image_shape)
        tmpdir = tempfile.mkdtemp(prefix="poisgibbs-denoise-")
        try:
            inp = os.path.join(tmpdir, "in.rawf32")
            out = os.path.join(tmpdir, "out.rawf32")
            write_raw_image(inp, img)
            try:
                proc = subprocess.run(self.command + [inp, out],
                                      timeout=self.timeout, capture_output=True)
            except subprocess.TimeoutExpired as exc:
                raise NumericalError(f"external denoiser timed out: {exc}") from exc
            if proc.returncode != 0:
                raise NumericalError(
                    f"external denoiser exited with {proc.returncode}: "
                    f"{proc.stderr.decode(errors='replace')[:200]}")
            den = read_raw_image(out)
            if den.shape != img.shape:
                raise NumericalError("external denoiser changed the image shape")
            return den.astype(np.float64).ravel()
        finally:
            shutil.rmtree(tmpdir, ignore_errors=True)


def write_raw_image(path, img):
    """uint32 height, uint32 width, then float32 row-major (little endian)."""
    img = np.asarray(img)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", img.shape[0], img.shape[1]))
        fh.write(img.astype("<f4").tobytes(order="C"))


def read_raw_image(path):
    with open(path, "rb") as fh:
        head = fh.read(8)
        if len(head) != 8:
            raise NumericalError("raw image file truncated")
        h, w = struct.unpack("<II", head)
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != h * w:
        raise NumericalError("raw image payload size mismatch")
    return data.reshape(h, w).astype(np.float64)


def check_convergence_constants(eps_z, C_z, beta, rho, L_D):
    """Relative convexity and smoothness constants of the mirror potential.

    Returns (m, M, rho_max) where m and M are the strong-convexity and
    Lipschitz constants relative to the Burg geometry for a denoiser-
    residual regularizer with Lipschitz bound L_D on z bounded to
    [eps_z, C_z], and rho_max is the coupling bound keeping m positive.
    """
    if not (0 < eps_z <= C_z):
        raise ParameterDomainError("need 0 < eps_z <= C_z")
    if beta <= 0 or rho <= 0 or L_D < 0:
        raise ParameterDomainError("need beta > 0, rho > 0, L_D >= 0")
    m = 1.0 / rho - 1.0 + beta * (eps_z ** 4 / C_z ** 2 - L_D * C_z ** 2)
    M = beta * (1.0 + L_D) * C_z ** 2 + abs(1.0 / rho - 1.0)
    if eps_z ** 4 / C_z ** 4 <= L_D:
        rho_max = 1.0 / (1.0 + beta * (L_D * C_z ** 2 - eps_z ** 4 / C_z ** 2))
    else:
        rho_max = 1.0
    return m, M, rho_max
