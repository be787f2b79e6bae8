"""Counter-based fading RNG.

Fading coefficients are a pure function of (master seed, BS index, user
index), so any engine can regenerate any link's channel on demand, in any
order, and the uplink/downlink directions automatically see reciprocal
draws. The construction is the splitmix64 output function applied to a
seed/index hash, with Box-Muller for normals.

All arithmetic is modulo 2^64; numpy uint64 overflow here is intentional.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_PAIR1 = np.uint64(0xA24BAED4963EE407)  # odd constants keying the two indices
_PAIR2 = np.uint64(0x9FB21C651E98DF25)

_U64 = np.uint64
_TWO53 = 9007199254740992.0  # 2**53


def mix64(x):
    """splitmix64 finalizer: bijective avalanche on uint64."""
    with np.errstate(over="ignore"):
        z = np.asarray(x, dtype=np.uint64)
        z = (z ^ (z >> _U64(30))) * _MIX1
        z = (z ^ (z >> _U64(27))) * _MIX2
        return z ^ (z >> _U64(31))


def pair_seed(master, bs_index, user_index):
    """Per-link stream seed. Vectorized over either index."""
    with np.errstate(over="ignore"):
        m = mix64(np.uint64(master) + _GOLDEN)
        b = (np.asarray(bs_index, dtype=np.uint64) + _U64(1)) * _PAIR1
        u = (np.asarray(user_index, dtype=np.uint64) + _U64(1)) * _PAIR2
        return mix64(mix64(m ^ b) ^ u)


def _uniforms(seeds, n):
    """(len(seeds), n) doubles in (0, 1), open at both ends."""
    with np.errstate(over="ignore"):
        seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
        k = np.arange(1, n + 1, dtype=np.uint64)
        words = mix64(seeds[:, None] + k[None, :] * _GOLDEN)
    return ((words >> _U64(11)).astype(np.float64) + 0.5) / _TWO53


def standard_normals(seeds, n):
    """(len(seeds), n) iid N(0,1) via Box-Muller. n must be even."""
    if n % 2:
        raise ValueError("n must be even")
    u = _uniforms(seeds, n)
    u1, u2 = u[:, 0::2], u[:, 1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    ang = 2.0 * np.pi * u2
    out = np.empty_like(u)
    out[:, 0::2] = r * np.cos(ang)
    out[:, 1::2] = r * np.sin(ang)
    return out


def complex_fading(seeds, m):
    """(len(seeds), m) unit-variance circular complex Gaussians."""
    z = standard_normals(seeds, 2 * m)
    return (z[:, 0::2] + 1j * z[:, 1::2]) / np.sqrt(2.0)
