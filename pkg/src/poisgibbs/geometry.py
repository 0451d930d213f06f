"""Bregman generators, divergences and the mirror-map calculus.

Three separable generators are supported:

* ``burg``      h(x) = -sum(log x_i)          on the positive orthant
* ``negent``    h(x) = sum(x_i log x_i - x_i) on the positive orthant
* ``halfsq``    h(x) = ||x||^2 / 2            on all of R^n

Their Bregman divergences are Itakura-Saito, generalized KL and the
squared Euclidean distance.  Hessians are diagonal (the generators are
separable) and only the diagonal is ever materialized.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MirrorRangeError

BURG = "burg"
NEG_ENTROPY = "negent"
HALF_SQ = "halfsq"

_KINDS = (BURG, NEG_ENTROPY, HALF_SQ)

# divergence tags paired one-to-one with generators
EUCLIDEAN = "euclidean"
KL = "kl"
ITAKURA_SAITO = "itakura-saito"

_DIV_TO_MAP = {EUCLIDEAN: HALF_SQ, KL: NEG_ENTROPY, ITAKURA_SAITO: BURG}

# strict positivity guard: detect underflow-to-zero before log/division
_POS_FLOOR = 1e-300


@dataclass(frozen=True)
class MirrorMap:
    """A Bregman generator with its gradient calculus."""

    kind: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown mirror map kind {self.kind!r}")

    @property
    def positive_domain(self):
        return self.kind in (BURG, NEG_ENTROPY)

    def check_domain(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.positive_domain and not (z > _POS_FLOOR).all():
            bad = np.flatnonzero(~(z > _POS_FLOOR))
            raise DomainError(
                f"{self.kind} generator needs strictly positive entries; "
                f"offending indices {bad[:8].tolist()}")
        return z

    def value(self, z):
        z = self.check_domain(z)
        if self.kind == BURG:
            return float(-np.sum(np.log(z)))
        if self.kind == NEG_ENTROPY:
            return float(np.sum(z * np.log(z) - z))
        return float(0.5 * np.dot(z, z))

    def grad(self, z):
        z = self.check_domain(z)
        if self.kind == BURG:
            return -1.0 / z
        if self.kind == NEG_ENTROPY:
            return np.log(z)
        return z.copy()

    def hess_diag(self, z):
        z = self.check_domain(z)
        if self.kind == BURG:
            return 1.0 / (z * z)
        if self.kind == NEG_ENTROPY:
            return 1.0 / z
        return np.ones_like(z)

    def grad_inverse(self, theta):
        """Legendre inverse of the gradient; domain-checked with indices."""
        theta = np.asarray(theta, dtype=np.float64)
        if self.kind == BURG:
            bad = np.flatnonzero(~(theta < 0.0))
            if bad.size:
                raise MirrorRangeError(
                    f"burg dual coordinates must be strictly negative; "
                    f"offending indices {bad[:8].tolist()}", indices=bad)
            return -1.0 / theta
        if self.kind == NEG_ENTROPY:
            return np.exp(theta)
        return theta.copy()


def mirror_grad(mmap, z):
    return mmap.grad(z)


def mirror_hess_diag(mmap, z):
    return mmap.hess_diag(z)


def mirror_grad_inverse(mmap, theta):
    return mmap.grad_inverse(theta)


def bregman_div(kind, x, z):
    """d_h(x, z) = h(x) - h(z) - <grad h(z), x - z>, in closed form."""
    if kind not in _DIV_TO_MAP:
        raise ValueError(f"unknown divergence {kind!r}")
    mmap = MirrorMap(_DIV_TO_MAP[kind])
    x = mmap.check_domain(x)
    z = mmap.check_domain(z)
    if x.shape != z.shape:
        raise DomainError("divergence arguments must have equal length")
    if kind == EUCLIDEAN:
        d = x - z
        return float(0.5 * np.dot(d, d))
    if kind == KL:
        return float(np.sum(x * np.log(x / z) - x + z))
    r = x / z
    return float(np.sum(r - np.log(r) - 1.0))


def bregman_div_from_generator(kind, x, z):
    """Same divergence assembled from h and its gradient (cross-check path)."""
    if kind not in _DIV_TO_MAP:
        raise ValueError(f"unknown divergence {kind!r}")
    mmap = MirrorMap(_DIV_TO_MAP[kind])
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    return mmap.value(x) - mmap.value(z) - float(np.dot(mmap.grad(z), x - z))
