"""Counter-based uniforms: one SplitMix64 stream per (seed, path).

The uniform for slot ``n`` of path ``p`` is a pure function of
``(seed, p, n)``, so results never depend on how paths are split across
workers or how many paths are drawn.
"""
import numba
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_PATH_SALT = np.uint64(0xD1B54A32D192ED03)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_INV53 = 1.0 / 9007199254740992.0


@numba.njit(cache=True)
def mix64(z):
    z = np.uint64(z)
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@numba.njit(cache=True)
def path_key(seed, path):
    return mix64(mix64(np.uint64(seed)) ^ mix64(np.uint64(path) * _PATH_SALT + GOLDEN))


@numba.njit(cache=True)
def uniform_at(key, slot):
    z = mix64(np.uint64(key) + (np.uint64(slot) + np.uint64(1)) * GOLDEN)
    return np.float64(z >> _S11) * _INV53


def substream_uniforms(seed: int, path: int, n: int, start: int = 0) -> np.ndarray:
    """Uniforms in [0, 1) for slots ``start .. start+n-1`` of one path."""
    key = np.uint64(path_key(np.uint64(seed), np.uint64(path)))
    return _fill(key, start, n)


@numba.njit(cache=True)
def _fill(key, start, n):
    out = np.empty(n)
    for i in range(n):
        out[i] = uniform_at(key, start + i)
    return out


def _mix64_numpy(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def substream_uniforms_numpy(seed: int, path: int, n: int, start: int = 0) -> np.ndarray:
    """Pure-numpy twin of :func:`substream_uniforms`, used to cross-check the compiled kernel."""
    with np.errstate(over="ignore"):
        seed_mix = _mix64_numpy(np.array([seed], dtype=np.uint64))
        path_mix = _mix64_numpy(np.array([path], dtype=np.uint64) * _PATH_SALT + GOLDEN)
        key = _mix64_numpy(seed_mix ^ path_mix)
        slots = np.arange(start, start + n, dtype=np.uint64)
        z = _mix64_numpy(key + (slots + np.uint64(1)) * GOLDEN)
    return (z >> _S11).astype(np.float64) * _INV53
