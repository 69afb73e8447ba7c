"""Seedable, splittable random streams and the base distributions.

Streams are backed by numpy's counter-based Philox generator, keyed by a
``SeedSequence`` built from ``(seed, stream_id)``. Every sampler in the
package draws exclusively through an :class:`RngStream`.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError

__all__ = [
    "RngStream",
    "as_stream",
    "standard_normal",
    "exponential",
    "uniform",
    "gamma_sample",
    "beta_sample",
    "binomial_sample",
    "uniform_sphere",
]

_MASK64 = (1 << 64) - 1


class RngStream:
    """A replayable random stream identified by ``(seed, stream_id)``.

    Identical ``(seed, stream_id)`` pairs reproduce identical draws. Distinct
    stream ids under the same seed give independent streams; :meth:`split`
    derives further child streams without touching the parent state.

    A stream is single-owner: do not share one between threads.
    """

    def __init__(self, seed: int = 0, stream_id: int = 0, _path: tuple[int, ...] = ()):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self._path = (self.stream_id,) + tuple(_path)
        ss = np.random.SeedSequence(self.seed, spawn_key=self._path)
        self.generator = np.random.Generator(np.random.Philox(ss))

    def split(self, n: int) -> list["RngStream"]:
        """Return ``n`` child streams, independent of each other and of ``self``."""
        return [
            RngStream(self.seed, self.stream_id, _path=self._path[1:] + (i,))
            for i in range(n)
        ]

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, path={self._path[1:]})"


def as_stream(rng) -> RngStream:
    """Coerce ``None``, an int seed, or an existing stream to an :class:`RngStream`."""
    if isinstance(rng, RngStream):
        return rng
    if rng is None:
        return RngStream(0)
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    raise TypeError(f"expected RngStream or int seed, got {type(rng).__name__}")


def standard_normal(rng: RngStream, size=None):
    """N(0, 1) variates."""
    return rng.generator.standard_normal(size)


def exponential(rate, rng: RngStream, size=None):
    """Exponential variates with the given rate (``rate`` may be an array)."""
    rate = np.asarray(rate, dtype=float)
    if np.any(rate <= 0):
        raise DomainError("exponential rate must be positive")
    return rng.generator.standard_exponential(size) / rate


def uniform(rng: RngStream, size=None):
    """Uniform(0, 1) variates."""
    return rng.generator.random(size)


def gamma_sample(shape, rng: RngStream, size=None):
    """Gamma(shape, scale=1) variates.

    Marsaglia-Tsang squeeze rejection, with the ``U**(1/shape)`` boost for
    shape < 1 (numpy's implementation).
    """
    shape_arr = np.asarray(shape, dtype=float)
    if np.any(~(shape_arr > 0)):
        raise DomainError(f"gamma shape must be positive, got {shape!r}")
    return rng.generator.standard_gamma(shape, size)


def beta_sample(a, b, rng: RngStream, size=None):
    """Beta(a, b) variates, strictly inside (0, 1).

    Draws landing exactly on 0 or 1 through underflow are redrawn.
    """
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if np.any(~(a_arr > 0)) or np.any(~(b_arr > 0)):
        raise DomainError(f"beta parameters must be positive, got a={a!r}, b={b!r}")
    out = np.asarray(rng.generator.beta(a_arr, b_arr, size), dtype=float)
    bad = (out <= 0.0) | (out >= 1.0)
    while np.any(bad):
        if out.ndim == 0:
            out = np.asarray(rng.generator.beta(a_arr, b_arr))
            bad = (out <= 0.0) | (out >= 1.0)
            continue
        aa = np.broadcast_to(a_arr, out.shape)[bad]
        bb = np.broadcast_to(b_arr, out.shape)[bad]
        out[bad] = rng.generator.beta(aa, bb)
        bad = (out <= 0.0) | (out >= 1.0)
    return out[()] if out.ndim == 0 else out


def binomial_sample(n, p, rng: RngStream, size=None):
    """Binomial(n, p) variates.

    Inversion when ``n * min(p, 1-p) < 30``, BTPE rejection otherwise.
    """
    p_arr = np.asarray(p, dtype=float)
    n_arr = np.asarray(n)
    if np.any(~((p_arr >= 0) & (p_arr <= 1))):
        raise DomainError(f"binomial p must lie in [0, 1], got {p!r}")
    if np.any(n_arr < 0):
        raise DomainError("binomial n must be non-negative")
    return rng.generator.binomial(n_arr, p_arr, size)


def uniform_sphere(m: int, rng: RngStream, size=None) -> np.ndarray:
    """Uniform points on S^(m-1), as normalised Gaussian vectors.

    Returns shape ``(m,)`` or ``(*size, m)``.
    """
    if m < 1:
        raise DomainError(f"sphere dimension m must be >= 1, got {m}")
    shape = (m,) if size is None else tuple(np.atleast_1d(size)) + (m,)
    while True:
        g = rng.generator.standard_normal(shape)
        norms = np.linalg.norm(g, axis=-1, keepdims=True)
        # a zero Gaussian vector has probability zero, but guard anyway
        if np.all(norms > 0):
            return g / norms
