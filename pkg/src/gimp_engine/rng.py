"""Counter-based random streams.

Every uniform drawn by the engine is a pure function of
``(seed, domain, path, call, block)`` evaluated with the Philox4x32-10
block cipher.  A path's randomness therefore never depends on how paths
are split across workers or on the order in which chunks are processed.
"""
from __future__ import annotations

import numpy as np

SCHEME = "philox4x32-10/seed-path-domain-call"

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)

# substream domains; clock draws never share counters with base draws
DOMAIN_BASE = 0
DOMAIN_CLOCK = 1
DOMAIN_AUX = 2


def philox4x32(counter, key, rounds=10):
    """Philox4x32 applied elementwise.

    Parameters
    ----------
    counter : sequence of four uint32-valued arrays (broadcastable)
    key : pair of uint32-valued arrays or ints

    Returns
    -------
    tuple of four ``uint64`` arrays holding 32-bit words.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK for c in counter)
    k0, k1 = (np.asarray(k, dtype=np.uint64) & _MASK for k in key)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    for _ in range(rounds):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _S32, p0 & _MASK
        hi1, lo1 = p1 >> _S32, p1 & _MASK
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = (k0 + _W0) & _MASK
        k1 = (k1 + _W1) & _MASK
    return c0, c1, c2, c3


def _to_unit(hi, lo):
    # 53-bit mantissa, shifted by half an ulp so 0 and 1 are never produced
    bits = ((hi >> np.uint64(5)) << np.uint64(26)) | (lo >> np.uint64(6))
    return (bits.astype(np.float64) + 0.5) * 2.0**-53


class RngStream:
    """A batch of independent per-path uniform streams.

    Row ``i`` of every draw belongs to path ``paths[i]``; the ``call``
    counter advances by one per :meth:`uniforms` call and is shared by
    all rows, so a path's ``call``-th draw is identical whichever batch
    it is drawn in.

    Parameters
    ----------
    seed : int
        Master seed, ``0 <= seed < 2**64``.
    domain : int
        Substream domain (see ``DOMAIN_*``).
    paths : int or array of int
        Path indices served by this batch.
    call : int
        Initial value of the call counter.
    """

    def __init__(self, seed, domain=DOMAIN_BASE, paths=0, call=0):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be in [0, 2**64), got {seed}")
        self.seed = seed
        self.domain = int(domain)
        self.paths = np.atleast_1d(np.asarray(paths, dtype=np.uint64))
        self.call = int(call)

    @property
    def n(self):
        return self.paths.shape[0]

    def uniforms(self, k):
        """Draw an ``(n, k)`` array of uniforms on the open interval (0, 1)."""
        n_blocks = (k + 1) // 2
        block = np.arange(n_blocks, dtype=np.uint64)[None, :]
        path = self.paths[:, None]
        w0, w1, w2, w3 = philox4x32(
            (path, np.uint64(self.domain), np.uint64(self.call), block),
            (self.seed & 0xFFFFFFFF, self.seed >> 32),
        )
        out = np.empty((self.n, 2 * n_blocks))
        out[:, 0::2] = _to_unit(w0, w1)
        out[:, 1::2] = _to_unit(w2, w3)
        self.call += 1
        return out[:, :k]

    def spawn(self, domain):
        """Same paths and seed, fresh counter in another domain."""
        return RngStream(self.seed, domain, self.paths, 0)

    def subset(self, rows):
        return RngStream(self.seed, self.domain, self.paths[rows], self.call)


class FixedStream:
    """Stream double that replays a prescribed array of uniforms.

    Used to force particular copula or clock draws in tests and demos.
    """

    def __init__(self, values):
        self.values = np.atleast_2d(np.asarray(values, dtype=float))
        self.call = 0

    @property
    def n(self):
        return self.values.shape[0]

    def uniforms(self, k):
        self.call += 1
        return np.broadcast_to(self.values[:, :k], (self.n, k)).copy()
