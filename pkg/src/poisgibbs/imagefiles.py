"""Minimal portable pixmap (PGM/PPM, binary) and raw float32 image I/O.

Pixmaps carry 8- or 16-bit integer samples (16-bit is big-endian per the
format); raw files are the denoiser-hook format: two little-endian uint32
dims then float32 row-major.  Grayscale arrays are (h, w); color arrays
are channel-planar (3, h, w) in [0, 1].
"""

import numpy as np

from .errors import ConfigError
from .priors import read_raw_image, write_raw_image  # noqa: F401  (re-export)


def _read_token(fh):
    tok = b""
    while True:
        ch = fh.read(1)
        if not ch:
            raise ConfigError("truncated pixmap header")
        if ch.isspace():
            if tok:
                return tok
            continue
        if ch == b"#":
            while fh.read(1) not in (b"\n", b""):
                pass
            continue
        tok += ch


def read_pixmap(path):
    """Read a binary PGM (P5) or PPM (P6) into float64 [0, 1]."""
    with open(path, "rb") as fh:
        magic = _read_token(fh)
        if magic not in (b"P5", b"P6"):
            raise ConfigError(f"unsupported pixmap magic {magic!r}")
        width = int(_read_token(fh))
        height = int(_read_token(fh))
        maxval = int(_read_token(fh))
        if maxval < 1 or maxval > 65535:
            raise ConfigError(f"bad maxval {maxval}")
        channels = 3 if magic == b"P6" else 1
        count = width * height * channels
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        data = np.frombuffer(fh.read(count * dtype.itemsize), dtype=dtype)
        if data.size != count:
            raise ConfigError("truncated pixmap payload")
    img = data.astype(np.float64) / maxval
    if channels == 1:
        return img.reshape(height, width)
    return img.reshape(height, width, 3).transpose(2, 0, 1)


def write_pixmap(path, img, maxval=65535):
    """Write float [0, 1] grayscale (h, w) or planar color (3, h, w)."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        magic, payload = b"P5", img[None]
    elif img.ndim == 3 and img.shape[0] == 3:
        magic, payload = b"P6", img
    else:
        raise ConfigError("expected (h, w) or (3, h, w) image")
    q = np.clip(np.rint(np.clip(payload, 0.0, 1.0) * maxval), 0, maxval)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    interleaved = q.transpose(1, 2, 0) if magic == b"P6" else q[0]
    with open(path, "wb") as fh:
        h, w = payload.shape[1], payload.shape[2]
        fh.write(magic + b"\n%d %d\n%d\n" % (w, h, maxval))
        fh.write(interleaved.astype(dtype).tobytes(order="C"))
