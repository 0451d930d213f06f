"""The split Gibbs sweep: latent counts, gamma draws for the image,
a mirror Langevin update for the prior-side splitting variable, and
inverse-gamma draws for the mediating variable.

Latent counts are never materialized as an m x n array; only their
column sums feed the gamma step, and the count step regenerates them
fresh each sweep, so memory stays O(n).

Every step draws from substreams keyed by (step kind, sweep index), so
the whole chain is a pure function of (seed, config, data) and a resumed
chain is bit-identical to an uninterrupted one.
"""

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import (ModelInconsistencyError, NumericalError,
                     ParameterDomainError)
from .geometry import BURG, MirrorMap
from .operators import ConvolutionOperator, PERIODIC
from .rngdist import (KIND_COUNTS, KIND_X, KIND_Z1, KIND_Z2, RandomStream,
                      draw_gamma_vec, draw_invgamma_vec)
from ._rngcore import normal_vec

_BURG = MirrorMap(BURG)


@dataclass
class PoissonModel:
    """Counts y, intensity scale alpha, forward operator."""

    y: np.ndarray
    alpha: float
    op: object

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.int64)
        if (self.y < 0).any():
            raise ParameterDomainError("counts must be nonnegative")
        if self.y.shape != (self.op.m,):
            raise ParameterDomainError(
                f"y has length {self.y.size}, operator has {self.op.m} rows")
        if not self.alpha > 0:
            raise ParameterDomainError("alpha must be > 0")


@dataclass
class SamplerConfig:
    rho: float
    gamma_step: float
    n_mc: int
    n_bi: int
    seed: int
    inner_steps: int = 1
    thin: int = 1
    theta_guard: float = 1e-10

    def __post_init__(self):
        if not self.rho > 0:
            raise ParameterDomainError("rho must be > 0")
        if not self.gamma_step > 0:
            raise ParameterDomainError("gamma_step must be > 0")
        if self.inner_steps < 1 or self.thin < 1:
            raise ParameterDomainError("inner_steps and thin must be >= 1")
        if not 0 <= self.n_bi < self.n_mc:
            raise ParameterDomainError("need 0 <= n_bi < n_mc")
        if not self.theta_guard > 0:
            raise ParameterDomainError("theta_guard must be > 0")


@dataclass
class ChainState:
    x: np.ndarray
    s: np.ndarray
    z1: np.ndarray
    z2: np.ndarray

    def validate(self):
        for name in ("x", "z1", "z2"):
            v = getattr(self, name)
            if not (np.isfinite(v).all() and (v > 0).all()):
                raise NumericalError(f"{name} must be finite and strictly positive")
        if (self.s < 0).any():
            raise ParameterDomainError("latent count sums must be nonnegative")


class PosteriorSummary:
    """Running posterior moments plus a thinned sample store."""

    def __init__(self, n):
        self.mean = np.zeros(n)
        self.m2 = np.zeros(n)
        self.count = 0
        self._thinned = []

    def update(self, x):
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def store(self, x):
        self._thinned.append(x.copy())

    @property
    def thinned(self):
        if self._thinned:
            return np.asarray(self._thinned)
        return np.empty((0, self.mean.size))

    def variance(self):
        if self.count < 2:
            return np.zeros_like(self.m2)
        return self.m2 / (self.count - 1)


@dataclass
class DiagnosticsBundle:
    potential_trace: np.ndarray
    xmean_trace: np.ndarray
    guard_count: int
    guard_opportunities: int
    sweeps_done: int

    @property
    def guard_rate(self):
        if self.guard_opportunities == 0:
            return 0.0
        return self.guard_count / self.guard_opportunities


def _positive(v, name):
    v = np.asarray(v, dtype=np.float64)
    if not (v > 0).all():
        raise ParameterDomainError(f"{name} must be strictly positive")
    return v


def step_counts(model, x, stream):
    """Draw the latent counts for every observed row; return column sums."""
    x = _positive(x, "x")
    op = model.op
    s = np.zeros(op.n, dtype=np.int64)
    key = np.uint64(stream._next_key())
    kern = backend.kernels()
    if isinstance(op, ConvolutionOperator):
        err = kern.step_counts_conv(
            op.taps_dr, op.taps_dc, op.taps_w, op.height, op.width,
            op.boundary == PERIODIC, x, model.y, key, s)
    elif hasattr(op, "indptr"):
        err = kern.step_counts_csr(op.indptr, op.indices, op.weights,
                                   x, model.y, key, s)
    else:
        err = _step_counts_generic(op, x, model.y, key, s, kern)
    if err >= 0:
        raise ModelInconsistencyError(
            f"row {err}: zero support weight but y[{err}] = {model.y[err]} > 0")
    return s


def _step_counts_generic(op, x, y, key, s, kern):
    # contract-only operators: same keying as the compiled paths
    from ._rngcore import derive
    for i in range(op.m):
        if y[i] == 0:
            continue
        row = op.row(i)
        w = row.weights * x[row.indices]
        if not w.sum() > 0:
            return i
        counts = kern.multinomial_one(np.uint64(derive(int(key), i)), int(y[i]), w)
        if counts[0] < 0:
            return i
        np.add.at(s, row.indices, counts)
    return -1


def step_x(model, s, z2, rho, stream):
    """Componentwise gamma draw for the image conditional."""
    z2 = _positive(z2, "z2")
    colsum = model.op.col_sums()
    shapes = np.asarray(s, dtype=np.float64) + 1.0 / rho + 1.0
    rates = model.alpha * colsum + 1.0 / (rho * z2)
    return draw_gamma_vec(stream, shapes, rates)


def potential_value(z1, z2, rho, prior, burnin=False):
    """Mirror-step potential: weighted prior plus the splitting coupling."""
    z1 = _positive(z1, "z1")
    z2 = _positive(z2, "z2")
    coupling = float(np.sum(np.log(z1)) + (1.0 / rho) * np.sum(z1 / z2 - np.log(z1)))
    return prior.beta * prior.value(z1, burnin=burnin) + coupling


def potential_grad(z1, z2, rho, prior, burnin=False):
    """Gradient of the mirror-step potential."""
    z1 = _positive(z1, "z1")
    z2 = _positive(z2, "z2")
    return (prior.beta * prior.score(z1, burnin=burnin)
            + 1.0 / (rho * z2) + (1.0 - 1.0 / rho) / z1)


def step_z1_hrlmc(z1, z2, prior, cfg, stream, burnin=False):
    """Mirror Langevin update(s) on the prior-side splitting variable.

    Dual coordinates that land outside the mirror range (>= -theta_guard)
    are clamped and counted; returns (new z1, guard hits).
    """
    z1 = _positive(z1, "z1")
    z2 = _positive(z2, "z2")
    gam = cfg.gamma_step
    noise_scale = np.sqrt(2.0 * gam)
    guard = 0
    for _ in range(cfg.inner_steps):
        grad = potential_grad(z1, z2, cfg.rho, prior, burnin=burnin)
        eps = normal_vec(stream._next_key(), z1.size)
        theta = (_BURG.grad(z1) - gam * grad
                 + noise_scale * np.sqrt(_BURG.hess_diag(z1)) * eps)
        bad = theta >= -cfg.theta_guard
        if bad.any():
            guard += int(bad.sum())
            theta = np.minimum(theta, -cfg.theta_guard)
        z1 = _BURG.grad_inverse(theta)
    return z1, guard


def step_z2(x, z1, rho, stream):
    """Componentwise inverse-gamma draw for the mediating variable."""
    x = _positive(x, "x")
    z1 = _positive(z1, "z1")
    n = x.size
    shapes = np.full(n, 2.0 / rho)
    scales = (x + z1) / rho
    return draw_invgamma_vec(stream, shapes, scales)


def default_init(model):
    """Constant positive state from a crude intensity estimate."""
    colsum = model.op.col_sums()
    denom = model.alpha * float(colsum.mean())
    level = float(model.y.mean()) / denom if denom > 0 else 0.0
    const = max(level, 1e-3)
    n = model.op.n
    full = np.full(n, const)
    return ChainState(full.copy(), np.zeros(n, dtype=np.int64),
                      full.copy(), full.copy())


def run_chain(model, prior, cfg, init=None, stream_id=0,
              start_checkpoint=None, stop_at_sweep=None, checkpoint_path=None):
    """Run the Gibbs chain; returns (PosteriorSummary, DiagnosticsBundle).

    `stop_at_sweep` ends the loop early (for checkpointing);
    `start_checkpoint` resumes from a loaded checkpoint dict and
    reproduces the uninterrupted chain exactly.
    """
    n = model.op.n
    master = RandomStream(cfg.seed, stream_id)
    model.op.col_sums()  # warm the cache before the loop
    if start_checkpoint is not None:
        state, t_start, summary, diag_arrays = _unpack_checkpoint(start_checkpoint, cfg)
        potential_trace, xmean_trace, guard_count, guard_ops = diag_arrays
    else:
        state = init if init is not None else default_init(model)
        state.validate()
        t_start = 0
        summary = PosteriorSummary(n)
        potential_trace = np.full(cfg.n_mc, np.nan)
        xmean_trace = np.full(cfg.n_mc, np.nan)
        guard_count = 0
        guard_ops = 0
    t_end = cfg.n_mc if stop_at_sweep is None else min(stop_at_sweep, cfg.n_mc)
    for t in range(t_start, t_end):
        burnin = t < cfg.n_bi
        try:
            s = step_counts(model, state.x, master.substream(KIND_COUNTS, t))
            x = step_x(model, s, state.z2, cfg.rho, master.substream(KIND_X, t))
            z1, g = step_z1_hrlmc(state.z1, state.z2, prior, cfg,
                                  master.substream(KIND_Z1, t), burnin=burnin)
            z2 = step_z2(x, z1, cfg.rho, master.substream(KIND_Z2, t))
        except Exception as exc:
            raise type(exc)(f"sweep {t}: {exc}") from exc
        state = ChainState(x, s, z1, z2)
        guard_count += g
        guard_ops += n * cfg.inner_steps
        potential_trace[t] = potential_value(z1, z2, cfg.rho, prior, burnin=burnin)
        xmean_trace[t] = float(x.mean())
        if t >= cfg.n_bi:
            summary.update(x)
            if (t - cfg.n_bi) % cfg.thin == 0:
                summary.store(x)
    done = max(t_start, t_end)
    diag = DiagnosticsBundle(potential_trace, xmean_trace,
                             guard_count, guard_ops, done)
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, state, done, cfg, summary, diag)
    return summary, diag


# -- checkpointing ----------------------------------------------------------

_MAGIC = b"PGCP"
_VERSION = 1


def save_checkpoint(path, state, sweep, cfg, summary, diag):
    """Versioned binary dump of chain state + stream position + summary."""
    payload = io.BytesIO()
    np.savez(payload,
             x=state.x, s=state.s, z1=state.z1, z2=state.z2,
             sweep=np.int64(sweep), seed=np.int64(cfg.seed),
             mean=summary.mean, m2=summary.m2,
             count=np.int64(summary.count), thinned=summary.thinned,
             potential_trace=diag.potential_trace,
             xmean_trace=diag.xmean_trace,
             guard_count=np.int64(diag.guard_count),
             guard_ops=np.int64(diag.guard_opportunities))
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(b"\x00" * 8)
        fh.write(payload.getvalue())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ParameterDomainError(f"not a chain checkpoint: magic {magic!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _VERSION:
            raise ParameterDomainError(f"unsupported checkpoint version {version}")
        fh.read(8)
        data = np.load(io.BytesIO(fh.read()))
    return {key: data[key] for key in data.files}


def _unpack_checkpoint(chk, cfg):
    if int(chk["seed"]) != cfg.seed:
        raise ParameterDomainError("checkpoint seed does not match the config")
    state = ChainState(chk["x"].copy(), chk["s"].copy(),
                       chk["z1"].copy(), chk["z2"].copy())
    n = state.x.size
    summary = PosteriorSummary(n)
    summary.mean = chk["mean"].copy()
    summary.m2 = chk["m2"].copy()
    summary.count = int(chk["count"])
    summary._thinned = [row.copy() for row in chk["thinned"]]
    arrays = (chk["potential_trace"].copy(), chk["xmean_trace"].copy(),
              int(chk["guard_count"]), int(chk["guard_ops"]))
    return state, int(chk["sweep"]), summary, arrays
