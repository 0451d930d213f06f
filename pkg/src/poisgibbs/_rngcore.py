"""Counter-based random stream primitives.

A stream is a 64-bit key.  The draw at logical slot ``i`` of a stream is
``mix64(key + (i + 1) * GOLDEN)`` -- the splitmix64 output function over a
Weyl sequence.  Child streams are derived by hashing a tag into the key
(the splittable-generator construction), so any (step, sweep, row,
component) coordinate addresses its own independent stream and draws can
be evaluated in any order, in compiled loops or vectorized numpy, with
identical results.

Scalar helpers here use Python integers masked to 64 bits (exact, no
overflow warnings); ``*_vec`` helpers operate on uint64 numpy arrays.
The numba backend re-implements the same arithmetic in nopython code.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX_A = 0xBF58476D1CE4E5B9
MIX_B = 0x94D049BB133111EB
DERIVE_TAG = 0xA0761D6478BD642F
SEED_SALT = 0x8BB84B93962EACC9

_U_GOLDEN = np.uint64(GOLDEN)
_U_MIX_A = np.uint64(MIX_A)
_U_MIX_B = np.uint64(MIX_B)
_U_TAG = np.uint64(DERIVE_TAG)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 2.0 ** -53
_TWO_PI = 2.0 * np.pi


def mix64(z):
    """splitmix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX_A) & MASK64
    z = ((z ^ (z >> 27)) * MIX_B) & MASK64
    return z ^ (z >> 31)


def derive(key, tag):
    """Child stream key for integer tag >= 0."""
    inner = mix64((tag * GOLDEN + DERIVE_TAG) & MASK64)
    return mix64(key ^ inner)


def stream_key(seed, stream_id):
    """Master key for a (seed, stream_id) pair."""
    return derive(mix64((seed ^ SEED_SALT) & MASK64), stream_id & MASK64)


def u64_at(key, slot):
    return mix64((key + (slot + 1) * GOLDEN) & MASK64)


def u01_at(key, slot):
    """Uniform double in the open interval (0, 1) at a slot."""
    return ((u64_at(key, slot) >> 11) + 0.5) * _INV53


# -- vectorized (numpy uint64) versions ------------------------------------

def mix64_vec(z):
    # uint64 wraparound is the point; silence the scalar overflow warning
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _U_MIX_A
        z = (z ^ (z >> _S27)) * _U_MIX_B
        return z ^ (z >> _S31)


def derive_vec(keys, tags):
    """Child keys; `keys` and `tags` broadcast, both uint64."""
    with np.errstate(over="ignore"):
        inner = mix64_vec(np.asarray(tags, dtype=np.uint64) * _U_GOLDEN + _U_TAG)
        return mix64_vec(np.uint64(keys) ^ inner)


def u01_vec(keys, slots):
    """Uniforms in (0,1); `keys` and `slots` broadcast, both uint64."""
    with np.errstate(over="ignore"):
        bits = mix64_vec(np.uint64(keys) + (np.asarray(slots, dtype=np.uint64) + _ONE) * _U_GOLDEN)
    return ((bits >> _S11).astype(np.float64) + 0.5) * _INV53


def normal_vec(key, n, base_slot=0):
    """n i.i.d. standard normals from one stream, Box-Muller, 2 slots each."""
    idx = np.arange(n, dtype=np.uint64)
    base = np.uint64(base_slot)
    two = np.uint64(2)
    u1 = u01_vec(np.uint64(key), base + two * idx)
    u2 = u01_vec(np.uint64(key), base + two * idx + _ONE)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


def normal_keys_vec(keys, slot=0):
    """One standard normal per key (slot, slot+1 of each stream)."""
    keys = np.asarray(keys, dtype=np.uint64)
    u1 = u01_vec(keys, np.uint64(slot))
    u2 = u01_vec(keys, np.uint64(slot + 1))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
