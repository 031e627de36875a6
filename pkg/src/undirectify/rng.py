"""Splittable, counter-based random streams.

Every replicate of every experiment gets its own 64-bit seed derived from
``(base_seed, k)`` by :func:`split`.  Independent-indicator samplers read
uniforms straight from a stateless hash of ``(key, counter)`` so a batch of
replicates can be generated in one vectorised call and still agree bit for bit
with the replicate sampled alone.  Sequential samplers (rejection loops) use a
numpy ``Philox`` generator keyed by the same seed.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
DEFAULT_SEED = 0xDEADBEEF

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SPLIT_GAMMA = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# fixed sub-streams of a single sample seed
STREAM_TYPES = 1 << 32
STREAM_EDGES = (1 << 32) + 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def _as_u64(x) -> np.ndarray:
    arr = np.asarray(x, dtype=object) if not isinstance(x, np.ndarray) else x
    if arr.dtype == object:
        arr = np.array([int(v) & MASK64 for v in np.ravel(arr)], dtype=np.uint64).reshape(np.shape(arr))
    return arr.astype(np.uint64, copy=False)


def split(seed: int, k):
    """Derive the seed of child stream ``k`` (scalar or array) of ``seed``."""
    base = _mix(_as_u64([seed]))[0]
    ks = _as_u64(k)
    with np.errstate(over="ignore"):
        out = _mix(base ^ ((ks + np.uint64(1)) * _SPLIT_GAMMA))
    if np.ndim(k) == 0:
        return int(out.reshape(()))
    return out


def uniforms(seeds, n_counters: int, offset: int = 0) -> np.ndarray:
    """Uniforms in [0, 1) for every (seed, counter) pair.

    ``seeds`` is a scalar or 1-d array of sample seeds; the result has shape
    ``(len(seeds), n_counters)`` (or ``(n_counters,)`` for a scalar seed).
    Counter ``c`` of a seed always yields the same value, whatever the batch.
    """
    scalar = np.ndim(seeds) == 0
    keys = _mix(_as_u64([seeds] if scalar else seeds).reshape(-1))
    ctr = np.arange(offset, offset + n_counters, dtype=np.uint64) + np.uint64(1)
    with np.errstate(over="ignore"):
        x = keys[:, None] + ctr[None, :] * _GAMMA
    z = _mix(x)
    u = (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
    return u[0] if scalar else u


def generator(seed: int) -> np.random.Generator:
    """Sequential generator for rejection-style samplers."""
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))
