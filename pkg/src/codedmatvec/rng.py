"""Deterministic random streams for reproducible trials."""

from __future__ import annotations

import numpy as np

_U64 = 2**64


class RngStream:
    """Counter-based random stream keyed by (seed, stream_id).

    Identical keys reproduce the identical draw sequence; distinct
    stream_ids give statistically independent streams, so trial i of a
    Monte Carlo run is always RngStream(seed, i) regardless of how many
    trials run or in what order.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if not isinstance(seed, int) or not 0 <= seed < _U64:
            raise ValueError(f"seed must be an integer in [0, 2^64): got {seed!r}")
        if not isinstance(stream_id, int) or not 0 <= stream_id < _U64:
            raise ValueError(f"stream_id must be an integer in [0, 2^64): got {stream_id!r}")
        self.seed = seed
        self.stream_id = stream_id
        key = np.array([seed, stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def uniforms(self, size=None):
        """Draws from U[0, 1)."""
        return self._gen.random(size)

    def exponentials(self, rate, size=None):
        """Exponential draws via the inverse CDF of a uniform.

        `rate` may be a scalar or an array broadcastable against `size`.
        The explicit inverse-CDF transform (rather than a generator-
        specific ziggurat) keeps the draw sequence a pure function of the
        uniform stream.
        """
        u = self._gen.random(size)
        return -np.log1p(-u) / rate

    def standard_normals(self, size=None):
        return self._gen.standard_normal(size)

    def integers(self, low, high):
        return int(self._gen.integers(low, high))
