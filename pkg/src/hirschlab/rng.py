"""Counter-based random numbers (Philox4x32-10).

Every draw is a pure function of ``(seed, stream, path, step)``, so results do
not depend on how paths are scheduled across threads. Streams separate the
independent uses of one seed (walk increments, initial sampling, bootstrap).
"""
import numpy as np

from ._accel import njit

STREAM_WALK = 0
STREAM_SAMPLE = 1
STREAM_BOOTSTRAP = 2

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_SH = np.uint64(32)
_TWO_M32 = 2.0 ** -32
_TWO_PI = 2.0 * np.pi


@njit
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten Philox rounds on one 128-bit counter; words are uint64 holding 32 bits."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _SH
        lo0 = p0 & _MASK
        hi1 = p1 >> _SH
        lo1 = p1 & _MASK
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = (k0 + _W0) & _MASK
        k1 = (k1 + _W1) & _MASK
    return c0, c1, c2, c3


@njit
def uniforms4(seed, stream, path, step):
    """Four uniforms in (0, 1) for the counter ``(step, path, stream)``."""
    s = np.uint64(seed)
    st = np.uint64(step)
    r0, r1, r2, r3 = philox4x32(st & _MASK, st >> _SH, np.uint64(path) & _MASK,
                                np.uint64(stream) & _MASK, s & _MASK, s >> _SH)
    return ((r0 + 0.5) * _TWO_M32, (r1 + 0.5) * _TWO_M32,
            (r2 + 0.5) * _TWO_M32, (r3 + 0.5) * _TWO_M32)


@njit
def normals2_uniforms2(seed, stream, path, step):
    """Two standard normals (Box-Muller) plus two spare uniforms."""
    a, b, c, d = uniforms4(seed, stream, path, step)
    r = np.sqrt(-2.0 * np.log(a))
    return r * np.cos(_TWO_PI * b), r * np.sin(_TWO_PI * b), c, d


# --- numpy versions, vectorised over arrays of paths/steps -------------------

def philox4x32_np(c0, c1, c2, c3, k0, k1):
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK for c in (c0, c1, c2, c3))
    k0 = np.uint64(k0) & _MASK
    k1 = np.uint64(k1) & _MASK
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = ((p1 >> _SH) ^ c1 ^ k0, p1 & _MASK,
                          (p0 >> _SH) ^ c3 ^ k1, p0 & _MASK)
        k0 = (k0 + _W0) & _MASK
        k1 = (k1 + _W1) & _MASK
    return c0, c1, c2, c3


def uniforms4_np(seed, stream, path, step):
    s = np.uint64(seed)
    path = np.asarray(path, dtype=np.uint64)
    step = np.broadcast_to(np.asarray(step, dtype=np.uint64), path.shape)
    stream_arr = np.full(path.shape, stream, dtype=np.uint64)
    out = philox4x32_np(step & _MASK, step >> _SH, path & _MASK, stream_arr,
                        s & _MASK, s >> _SH)
    return tuple((r.astype(np.float64) + 0.5) * _TWO_M32 for r in out)


def normals2_uniforms2_np(seed, stream, path, step):
    a, b, c, d = uniforms4_np(seed, stream, path, step)
    r = np.sqrt(-2.0 * np.log(a))
    return r * np.cos(_TWO_PI * b), r * np.sin(_TWO_PI * b), c, d


def uniforms(seed, stream, n, step=0):
    """``n`` uniforms from paths ``0..n-1`` at one step (first word of each block)."""
    return uniforms4_np(seed, stream, np.arange(n, dtype=np.uint64), step)[0]
