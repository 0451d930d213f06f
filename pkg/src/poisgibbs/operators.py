"""Nonnegative forward operators with the three access patterns the
sampler needs: full application, sparse row access, and column sums.

``SparseOperator`` stores explicit CSR rows (identity, projectors);
``ConvolutionOperator`` generates rows on the fly from its stencil, since
materializing m x kernel-size rows is wasteful and the count step walks
rows every sweep.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ParameterDomainError

PERIODIC = "periodic"
ZEROPAD = "zeropad"

# weights this small are treated as absent to avoid 0/0 in row normalization
_WEIGHT_FLOOR = 1e-14


@dataclass
class OperatorRow:
    """Sparse row: strictly increasing column ids with positive weights."""

    indices: np.ndarray
    weights: np.ndarray


class ForwardOperator:
    """Contract: nonnegative entries, nrows/ncols, apply/row/col_sums."""

    m = 0
    n = 0

    def apply(self, x):
        raise NotImplementedError

    def row(self, i):
        raise NotImplementedError

    def col_sums(self):
        raise NotImplementedError


class SparseOperator(ForwardOperator):
    """CSR-backed operator used for identity and projector matrices."""

    def __init__(self, m, n, indptr, indices, weights):
        self.m = int(m)
        self.n = int(n)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.weights = np.asarray(weights, dtype=np.float64)
        if (self.weights < 0).any():
            raise ParameterDomainError("operator weights must be nonnegative")
        self._col_sums = None

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise ParameterDomainError(f"expected length-{self.n} vector")
        prod = self.weights * x[self.indices]
        out = np.zeros(self.m)
        # reduceat needs nonempty segments; use add.at for generality
        np.add.at(out, np.repeat(np.arange(self.m), np.diff(self.indptr)), prod)
        return out

    def row(self, i):
        if not 0 <= i < self.m:
            raise ParameterDomainError(f"row index {i} out of range")
        sl = slice(self.indptr[i], self.indptr[i + 1])
        idx = self.indices[sl]
        w = self.weights[sl]
        keep = w > _WEIGHT_FLOOR
        order = np.argsort(idx[keep], kind="stable")
        return OperatorRow(idx[keep][order], w[keep][order])

    def col_sums(self):
        if self._col_sums is None:
            s = np.zeros(self.n)
            np.add.at(s, self.indices, self.weights)
            self._col_sums = s
        return self._col_sums


def identity_operator(n):
    ar = np.arange(n, dtype=np.int64)
    return SparseOperator(n, n, np.arange(n + 1, dtype=np.int64), ar, np.ones(n))


class ConvolutionOperator(ForwardOperator):
    """Stencil correlation on an image grid, periodic or zero-padded.

    Output pixel (r, c) reads input pixel (r + u - ch, c + v - cw) with
    weight kernel[u, v]; ch, cw is the stencil center.
    """

    def __init__(self, kernel, image_shape, boundary=PERIODIC):
        kernel = np.asarray(kernel, dtype=np.float64)
        if kernel.ndim != 2:
            raise ParameterDomainError("kernel must be 2-D")
        if (kernel < 0).any() or not kernel.sum() > 0:
            raise ParameterDomainError("kernel must be nonnegative with positive mass")
        if boundary not in (PERIODIC, ZEROPAD):
            raise ParameterDomainError(f"unknown boundary {boundary!r}")
        self.kernel = kernel
        self.height, self.width = map(int, image_shape)
        self.boundary = boundary
        self.m = self.n = self.height * self.width
        kh, kw = kernel.shape
        self._ch, self._cw = kh // 2, kw // 2
        dr, dc = np.mgrid[0:kh, 0:kw]
        keep = kernel.ravel() > _WEIGHT_FLOOR
        self.taps_dr = (dr.ravel() - self._ch)[keep].astype(np.int64)
        self.taps_dc = (dc.ravel() - self._cw)[keep].astype(np.int64)
        self.taps_w = kernel.ravel()[keep]
        self._col_sums = None

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise ParameterDomainError(f"expected length-{self.n} vector")
        img = x.reshape(self.height, self.width)
        mode = "wrap" if self.boundary == PERIODIC else "constant"
        out = ndimage.correlate(img, self.kernel, mode=mode, cval=0.0,
                                origin=(self._ch - self.kernel.shape[0] // 2,
                                        self._cw - self.kernel.shape[1] // 2))
        return out.ravel()

    def row(self, i):
        if not 0 <= i < self.m:
            raise ParameterDomainError(f"row index {i} out of range")
        r, c = divmod(i, self.width)
        rr = r + self.taps_dr
        cc = c + self.taps_dc
        if self.boundary == PERIODIC:
            rr = rr % self.height
            cc = cc % self.width
            keep = np.ones(rr.size, dtype=bool)
        else:
            keep = (rr >= 0) & (rr < self.height) & (cc >= 0) & (cc < self.width)
        idx = rr[keep] * self.width + cc[keep]
        w = self.taps_w[keep]
        # wraparound can alias several taps onto one pixel on tiny grids
        uniq, inv = np.unique(idx, return_inverse=True)
        ws = np.zeros(uniq.size)
        np.add.at(ws, inv, w)
        return OperatorRow(uniq, ws)

    def col_sums(self):
        if self._col_sums is None:
            if self.boundary == PERIODIC:
                self._col_sums = np.full(self.n, self.kernel.sum())
            else:
                # column sums are the adjoint applied to ones: a correlation
                # with the flipped stencil, truncated at the borders
                ones = np.ones((self.height, self.width))
                flipped = self.kernel[::-1, ::-1]
                kh, kw = self.kernel.shape
                out = ndimage.correlate(
                    ones, flipped, mode="constant", cval=0.0,
                    origin=((kh - 1 - self._ch) - kh // 2,
                            (kw - 1 - self._cw) - kw // 2))
                self._col_sums = out.ravel()
        return self._col_sums


def gaussian_kernel(size, sigma):
    """Normalized truncated Gaussian stencil (odd or even size)."""
    if size < 1 or sigma <= 0:
        raise ParameterDomainError("kernel size >= 1 and sigma > 0 required")
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-0.5 * (ax / sigma) ** 2)
    k = np.outer(g, g)
    return k / k.sum()


class ProjectorOperator(SparseOperator):
    """Parallel-beam line-integral projector with materialized sparse rows."""

    def __init__(self, grid, angles, detector_count, indptr, indices, weights,
                 row_angle, row_det):
        super().__init__(len(row_angle), grid[0] * grid[1], indptr, indices, weights)
        self.grid = (int(grid[0]), int(grid[1]))
        self.angles = np.asarray(angles, dtype=np.float64)
        self.detector_count = int(detector_count)
        self.row_angle = np.asarray(row_angle, dtype=np.int64)
        self.row_det = np.asarray(row_det, dtype=np.int64)


def _trace_ray(height, width, phi, t):
    """Exact intersection lengths of one ray with the unit-pixel grid.

    The ray is {t*n + s*d} with d = (cos phi, sin phi), n = (-sin phi,
    cos phi), over the box [-W/2, W/2] x [-H/2, H/2]; x maps to columns
    and y to rows counted downward from the top.
    """
    dx, dy = math.cos(phi), math.sin(phi)
    px, py = -t * math.sin(phi), t * math.cos(phi)
    half_w, half_h = width / 2.0, height / 2.0
    s_lo, s_hi = -np.inf, np.inf
    for p, d, half in ((px, dx, half_w), (py, dy, half_h)):
        if abs(d) < 1e-12:
            if abs(p) >= half:
                return None
        else:
            s0 = (-half - p) / d
            s1 = (half - p) / d
            if s0 > s1:
                s0, s1 = s1, s0
            s_lo = max(s_lo, s0)
            s_hi = min(s_hi, s1)
    if not s_lo < s_hi:
        return None
    cross = [np.array([s_lo, s_hi])]
    if abs(dx) >= 1e-12:
        j = np.arange(width + 1) - half_w
        s = (j - px) / dx
        cross.append(s[(s > s_lo) & (s < s_hi)])
    if abs(dy) >= 1e-12:
        j = np.arange(height + 1) - half_h
        s = (j - py) / dy
        cross.append(s[(s > s_lo) & (s < s_hi)])
    s_all = np.unique(np.concatenate(cross))
    lengths = np.diff(s_all)
    mids = 0.5 * (s_all[1:] + s_all[:-1])
    xm = px + mids * dx
    ym = py + mids * dy
    cols = np.floor(xm + half_w).astype(np.int64)
    rows = np.floor(half_h - ym).astype(np.int64)
    ok = (lengths > 1e-12) & (cols >= 0) & (cols < width) & (rows >= 0) & (rows < height)
    if not ok.any():
        return None
    idx = rows[ok] * width + cols[ok]
    return idx, lengths[ok]


def default_detector_count(width):
    """Detectors spanning the grid diagonal at unit pitch."""
    return int(math.ceil(width * math.sqrt(2.0)))


def build_projector(grid, angles, detector_count=None):
    """Assemble the parallel-beam projector; drops rays that miss the grid."""
    height, width = map(int, grid)
    if height < 2 or width < 2:
        raise ParameterDomainError("grid dimensions must be >= 2")
    angles = np.atleast_1d(np.asarray(angles, dtype=np.float64))
    if angles.size == 0:
        raise ParameterDomainError("need at least one projection angle")
    if detector_count is None:
        detector_count = default_detector_count(width)
    detector_count = int(detector_count)
    offsets = np.arange(detector_count) - (detector_count - 1) / 2.0
    indptr = [0]
    indices = []
    weights = []
    row_angle = []
    row_det = []
    dropped = 0
    for ai, phi in enumerate(angles):
        for di, t in enumerate(offsets):
            hit = _trace_ray(height, width, float(phi), float(t))
            if hit is None or hit[1].sum() <= _WEIGHT_FLOOR:
                dropped += 1
                continue
            idx, lens = hit
            order = np.argsort(idx, kind="stable")
            indices.append(idx[order])
            weights.append(lens[order])
            indptr.append(indptr[-1] + idx.size)
            row_angle.append(ai)
            row_det.append(di)
    if dropped:
        warnings.warn(f"dropped {dropped} rays that miss the grid")
    if not indices:
        raise ParameterDomainError("all rays miss the grid")
    return ProjectorOperator(
        (height, width), angles, detector_count,
        np.array(indptr, dtype=np.int64), np.concatenate(indices),
        np.concatenate(weights), row_angle, row_det)


def save_projector_geometry(path, proj):
    """Write (grid, angles, detector_count) as reproducible text."""
    with open(path, "w") as fh:
        fh.write("projector-geometry v1\n")
        fh.write(f"grid = {proj.grid[0]} {proj.grid[1]}\n")
        fh.write(f"detector_count = {proj.detector_count}\n")
        fh.write("angles = " + " ".join(repr(float(a)) for a in proj.angles) + "\n")


def load_projector_geometry(path):
    """Rebuild a projector from its geometry file."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "projector-geometry v1":
            raise ParameterDomainError(f"unrecognized geometry file: {header!r}")
        fields = {}
        for line in fh:
            if "=" in line:
                key, val = line.split("=", 1)
                fields[key.strip()] = val.strip()
    grid = tuple(int(v) for v in fields["grid"].split())
    det = int(fields["detector_count"])
    angles = np.array([float(v) for v in fields["angles"].split()])
    return build_projector(grid, angles, det)
