"""Seedable random streams and exact samplers for the Gibbs sweep.

A :class:`RandomStream` is identified by ``(seed, stream_id)``; distinct
stream ids give statistically independent sequences and the same pair
reproduces the same sequence on any platform.  Each draw call consumes
one child stream of the instance, so a stream is single-owner state;
``substream`` derives independent children for concurrent use.

Conventions fixed here once and for all: gamma is (shape, rate),
inverse gamma is (shape, scale), and ``draw_invgamma(s, (a, b))`` is
pathwise ``1 / draw_gamma(s, (a, b))``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend
from ._rngcore import stream_key, derive, normal_vec
from .errors import ParameterDomainError

# step-kind tags for substream derivation (sampler + experiments)
KIND_COUNTS = 1
KIND_X = 2
KIND_Z1 = 3
KIND_Z2 = 4
KIND_OBSERVE = 5
KIND_USER = 6


@dataclass
class GammaParams:
    """Gamma(shape, rate): density proportional to t^(shape-1) exp(-rate t)."""

    shape: float
    rate: float

    def validate(self):
        if not (self.shape > 0.0 and np.isfinite(self.shape)):
            raise ParameterDomainError(f"gamma shape must be > 0, got {self.shape}")
        if not (self.rate > 0.0 and np.isfinite(self.rate)):
            raise ParameterDomainError(f"gamma rate must be > 0, got {self.rate}")


@dataclass
class InvGammaParams:
    """InvGamma(shape, scale): density proportional to t^(-shape-1) exp(-scale/t)."""

    shape: float
    scale: float

    def validate(self):
        if not (self.shape > 0.0 and np.isfinite(self.shape)):
            raise ParameterDomainError(f"invgamma shape must be > 0, got {self.shape}")
        if not (self.scale > 0.0 and np.isfinite(self.scale)):
            raise ParameterDomainError(f"invgamma scale must be > 0, got {self.scale}")


@dataclass
class RandomStream:
    """Splittable counter-based random stream."""

    seed: int
    stream_id: int = 0
    _key: int = field(default=None, repr=False, compare=False)
    _count: int = field(default=0, repr=False, compare=False)

    def __post_init__(self):
        if self._key is None:
            self._key = stream_key(int(self.seed), int(self.stream_id))

    @property
    def key(self):
        return self._key

    def substream(self, *tags):
        """Independent child stream addressed by integer tags."""
        k = self._key
        for t in tags:
            k = derive(k, int(t))
        return RandomStream(self.seed, self.stream_id, _key=k)

    def _next_key(self):
        k = derive(self._key, self._count)
        self._count += 1
        return k


def draw_gamma(stream, p):
    """One Gamma(shape, rate) draw; strictly positive."""
    p.validate()
    kern = backend.kernels()
    g = kern.gamma_vec(np.uint64(stream._next_key()),
                       np.array([p.shape], dtype=np.float64))
    return float(g[0]) / p.rate


def draw_gamma_vec(stream, shapes, rates):
    """Componentwise Gamma(shape_j, rate_j) draws."""
    shapes = np.asarray(shapes, dtype=np.float64)
    rates = np.asarray(rates, dtype=np.float64)
    if not ((shapes > 0).all() and (rates > 0).all()):
        raise ParameterDomainError("gamma shapes and rates must all be > 0")
    kern = backend.kernels()
    return kern.gamma_vec(np.uint64(stream._next_key()), shapes) / rates


def draw_invgamma(stream, p):
    """One InvGamma(shape, scale) draw: 1 / Gamma(shape, rate=scale)."""
    p.validate()
    kern = backend.kernels()
    g = kern.gamma_vec(np.uint64(stream._next_key()),
                       np.array([p.shape], dtype=np.float64))
    return p.scale / float(g[0])


def draw_invgamma_vec(stream, shapes, scales):
    shapes = np.asarray(shapes, dtype=np.float64)
    scales = np.asarray(scales, dtype=np.float64)
    if not ((shapes > 0).all() and (scales > 0).all()):
        raise ParameterDomainError("invgamma shapes and scales must all be > 0")
    kern = backend.kernels()
    return scales / kern.gamma_vec(np.uint64(stream._next_key()), shapes)


def draw_multinomial(stream, total, probs):
    """Partition `total` over categories with the given probabilities.

    probs must be nonnegative and sum to 1 within 1e-12 (renormalized
    internally); counts land only on categories with positive probability.
    """
    total = int(total)
    if total < 0:
        raise ParameterDomainError("multinomial total must be >= 0")
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1 or probs.size < 1:
        raise ParameterDomainError("probs must be a nonempty vector")
    if (probs < 0).any():
        raise ParameterDomainError("multinomial probabilities must be >= 0")
    mass = probs.sum()
    if total == 0:
        return np.zeros(probs.size, dtype=np.int64)
    if mass <= 0.0:
        raise ParameterDomainError("all-zero probabilities with positive total")
    if abs(mass - 1.0) > 1e-12:
        raise ParameterDomainError(f"probabilities sum to {mass}, not 1")
    kern = backend.kernels()
    out = kern.multinomial_one(np.uint64(stream._next_key()), total, probs / mass)
    if out[0] < 0:
        raise ParameterDomainError("probability mass exhausted before counts")
    return out


def draw_std_normal_vec(stream, length):
    """Vector of i.i.d. standard normals."""
    length = int(length)
    if length < 1:
        raise ParameterDomainError("length must be >= 1")
    return normal_vec(stream._next_key(), length)


def draw_poisson_vec(stream, lams):
    """Componentwise Poisson draws (data generation helper)."""
    lams = np.asarray(lams, dtype=np.float64)
    if (lams < 0).any() or not np.isfinite(lams).all():
        raise ParameterDomainError("poisson rates must be finite and >= 0")
    kern = backend.kernels()
    return kern.poisson_vec(np.uint64(stream._next_key()), lams)
