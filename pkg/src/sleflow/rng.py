"""Counter-based randomness keyed by integer addresses.

Every random deviate in the package is a pure function of a small tuple of
integers (seed, domain, and an address such as a dyadic cell position).  Two
consumers that ask for the same address see the same value, no matter in which
order or how often they ask.  That property is what makes midpoint refinement
of a Brownian path reproducible and lets independently stepped solvers share
one underlying driver.

The generator is a splitmix64 chain feeding Box-Muller.  It is deterministic
across processes and worker counts; it is not cryptographic.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64
_MASK = U64(0xFFFFFFFFFFFFFFFF)
_GOLD = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_SALT_U1 = U64(0x6A09E667F3BCC909)
_SALT_U2 = U64(0xBB67AE8584CAA73B)
_TWO53_INV = 1.0 / 9007199254740992.0
_TWO_PI = 6.283185307179586476925287

# domain tags keep independent consumers off each other's key space
DOMAIN_DRIVER = 1
DOMAIN_DIFFUSION = 2
DOMAIN_TASK = 3
DOMAIN_BRIDGE = 4


@njit(cache=True, nogil=True)
def mix64(z):
    z = (z + _GOLD) & _MASK
    z = ((z ^ (z >> U64(30))) * _MIX1) & _MASK
    z = ((z ^ (z >> U64(27))) * _MIX2) & _MASK
    return z ^ (z >> U64(31))


@njit(cache=True, nogil=True)
def combine(state, word):
    return mix64(state ^ ((word + _GOLD) & _MASK))


@njit(cache=True, nogil=True)
def key4(seed, domain, hi, lo):
    k = mix64(U64(seed))
    k = combine(k, U64(domain))
    k = combine(k, U64(hi))
    k = combine(k, U64(lo))
    return k


@njit(cache=True, nogil=True)
def uniform_from_key(key, salt):
    # 53-bit mantissa shifted into (0, 1); never returns an endpoint
    return (np.float64(mix64(key ^ salt) >> U64(11)) + 0.5) * _TWO53_INV


@njit(cache=True, nogil=True)
def normal_from_key(key):
    u1 = uniform_from_key(key, _SALT_U1)
    u2 = uniform_from_key(key, _SALT_U2)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


def seed_for(master: int, *words: int) -> int:
    """Derive a child seed from a master seed and an integer path.

    Not performance critical; kernels receive the derived seed as an argument.
    """
    k = mix64(U64(int(master) & 0xFFFFFFFFFFFFFFFF))
    k = combine(U64(k), U64(DOMAIN_TASK))
    for w in words:
        k = combine(U64(k), U64(int(w) & 0xFFFFFFFFFFFFFFFF))
    return int(k)


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    z = (z + _GOLD).astype(np.uint64)
    z = ((z ^ (z >> U64(30))) * _MIX1).astype(np.uint64)
    z = ((z ^ (z >> U64(27))) * _MIX2).astype(np.uint64)
    return z ^ (z >> U64(31))


def normals_for_cells(seed: int, domain: int, hi, lo) -> np.ndarray:
    """Vectorized normal_from_key over arrays of (hi, lo) addresses.

    Bit-identical to the scalar kernel path; used when a whole grid of cells
    is sampled at once.
    """
    hi = np.asarray(hi, dtype=np.uint64)
    lo = np.asarray(lo, dtype=np.uint64)
    hi, lo = np.broadcast_arrays(hi, lo)
    k = _mix64_vec(np.full(lo.shape, U64(seed), dtype=np.uint64))
    for word in (np.full(lo.shape, U64(domain), dtype=np.uint64), hi, lo):
        k = _mix64_vec(k ^ ((word + _GOLD).astype(np.uint64)))
    u1 = ((_mix64_vec(k ^ _SALT_U1) >> U64(11)).astype(np.float64) + 0.5) * _TWO53_INV
    u2 = ((_mix64_vec(k ^ _SALT_U2) >> U64(11)).astype(np.float64) + 0.5) * _TWO53_INV
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
