"""Counter-based hashing shared by site states and trial seeds.

Hash family "v1" (bit-exact, do not change without bumping ``HASH_VERSION``):

    mix64(z)   = splitmix64 finalizer applied to z + 0x9E3779B97F4A7C15
    site(s, x, y, z) = mix64(mix64(mix64(mix64(s ^ SITE_DOMAIN) ^ x) ^ y) ^ z)
    uniform    = (h >> 11) * 2**-53

Coordinates enter as 64-bit two's complement.  Trial seeds use the same
mixer under a separate domain constant.
"""

from __future__ import annotations

import numpy as np

HASH_VERSION = 1

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

SITE_DOMAIN = 0x5349544553544154  # "SITESTAT"
TRIAL_DOMAIN = 0x545249414C534545  # "TRIALSEE"
POINT_DOMAIN = 0x504F494E54534545  # "POINTSEE"
HYPER_DOMAIN = 0x4859504552435542  # "HYPERCUB"

_U53 = float(2**53)


def mix64(z: int) -> int:
    z = (z + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized :func:`mix64` on a uint64 array (wrapping arithmetic)."""
    z = z + np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def as_u64(values) -> np.ndarray:
    return np.asarray(values, dtype=np.int64).astype(np.uint64)


def chain_hash(seed: int, domain: int, coords) -> int:
    h = mix64((seed & MASK64) ^ domain)
    for c in coords:
        h = mix64(h ^ (int(c) & MASK64))
    return h


def site_hash(seed: int, x: int, y: int, z: int) -> int:
    return chain_hash(seed, SITE_DOMAIN, (x, y, z))


def uniform(h):
    """Map hash values (int or uint64 array) to [0, 1)."""
    if isinstance(h, np.ndarray):
        return (h >> np.uint64(11)).astype(np.float64) / _U53
    return (h >> 11) / _U53


def below(h, p: float):
    """``uniform(h) < p`` without rounding: both sides scale by 2**53 exactly."""
    if isinstance(h, np.ndarray):
        return (h >> np.uint64(11)).astype(np.float64) < p * _U53
    return (h >> 11) < p * _U53


def derive_seed(base_seed: int, index: int, domain: int = TRIAL_DOMAIN) -> int:
    """Seed of trial ``index`` under ``base_seed``; independent of evaluation order."""
    return mix64(mix64((base_seed & MASK64) ^ domain) ^ (index & MASK64))


def derive_seeds(base_seed: int, stop: int, start: int = 0, domain: int = TRIAL_DOMAIN) -> np.ndarray:
    """Vector of :func:`derive_seed` for indices ``start .. stop - 1``."""
    head = np.uint64(mix64((base_seed & MASK64) ^ domain))
    return mix64_array(head ^ np.arange(start, stop, dtype=np.uint64))


def box_hash(seed: int, xs: np.ndarray, ys: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """Site hashes on the grid ``xs × ys × zs`` as an array indexed [x, y, z]."""
    head = np.uint64(mix64((seed & MASK64) ^ SITE_DOMAIN))
    hx = mix64_array(head ^ as_u64(xs))
    hxy = mix64_array(hx[:, None] ^ as_u64(ys)[None, :])
    return mix64_array(hxy[:, :, None] ^ as_u64(zs)[None, None, :])


def many_seed_site_hash(seeds: np.ndarray, x: int, y: int, z: int) -> np.ndarray:
    """Hash of one site under each seed of a uint64 seed vector."""
    h = mix64_array(seeds ^ np.uint64(SITE_DOMAIN))
    for c in (x, y, z):
        h = mix64_array(h ^ np.uint64(c & MASK64))
    return h
