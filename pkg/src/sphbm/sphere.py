"""Exact increments and paths of Brownian motion on spheres.

For ``d >= 3`` an increment from the north pole ``e_d`` over time ``t`` is
``(2 sqrt(X (1 - X)) Y, 1 - 2X)`` with ``X ~ WF_{0,t}((d-1)/2, (d-1)/2)`` and
``Y`` uniform on ``S^(d-2)``; any orthogonal map sending ``e_d`` to the start
``z`` carries it to an increment from ``z``. We use the Householder
reflection across the bisector of ``e_d`` and ``z``, applied as a rank-one
update. ``d = 2`` is handled by rotating the start by a Gaussian angle.

Points are plain ``float`` arrays of shape ``(d,)`` or ``(n, d)``; the
:class:`SpherePoint` wrapper validates a single point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .rng import RngStream, standard_normal, uniform_sphere
from .wright_fisher import EXACT_FLOOR, WrightFisherLaw, sample_wf_components

__all__ = [
    "SpherePoint",
    "HouseholderFrame",
    "IncrementDraw",
    "householder_to",
    "apply_frame",
    "gram_schmidt_frame",
    "north_pole",
    "sample_increment",
    "sample_path",
    "sample_increment_radius",
    "sample_circle_increment",
    "geodesic_distance",
    "renormalization_events",
]

_UNIT_TOL = 1e-9
_POLE_TOL = 1e-12
_DRIFT_TOL = 1e-10

# Number of sampled points whose pre-normalisation norm drifted by more than
# _DRIFT_TOL; a diagnostic only.
renormalization_events = 0


@dataclass(frozen=True)
class SpherePoint:
    """A point of ``S^(d-1)``; coordinates are renormalised on construction."""

    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        if c.size < 2:
            raise DomainError("sphere points need dimension d >= 2")
        norm = np.linalg.norm(c)
        if abs(norm - 1.0) > _UNIT_TOL:
            raise DomainError(f"point is not on the unit sphere (|z| = {norm!r})")
        c = c / norm
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def d(self) -> int:
        return self.coords.size

    @classmethod
    def from_vector(cls, v) -> "SpherePoint":
        v = np.asarray(v, dtype=float)
        n = np.linalg.norm(v)
        if n == 0:
            raise DomainError("cannot normalise the zero vector")
        return cls(v / n)

    def __array__(self, dtype=None, copy=None):
        return self.coords if dtype is None else self.coords.astype(dtype)

    def __repr__(self):
        return f"SpherePoint({np.array2string(self.coords, precision=6)})"


def north_pole(d: int) -> np.ndarray:
    e = np.zeros(d)
    e[-1] = 1.0
    return e


def _as_points(z) -> np.ndarray:
    arr = np.asarray(z.coords if isinstance(z, SpherePoint) else z, dtype=float)
    if arr.ndim not in (1, 2) or arr.shape[-1] < 2:
        raise DomainError("expected points of shape (d,) or (n, d) with d >= 2")
    norms = np.linalg.norm(arr, axis=-1)
    if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
        raise DomainError("starting point is not on the unit sphere")
    return arr


@dataclass(frozen=True)
class HouseholderFrame:
    """The reflection ``I - 2 u u^T`` sending ``e_d`` to a target point.

    ``u is None`` stands for the identity (target equal to ``e_d``).
    """

    d: int
    u: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_identity(self) -> bool:
        return self.u is None

    def matrix(self) -> np.ndarray:
        """Dense ``d x d`` matrix; for inspection and tests only."""
        if self.u is None:
            return np.eye(self.d)
        return np.eye(self.d) - 2.0 * np.outer(self.u, self.u)


def _householder_vectors(z: np.ndarray) -> np.ndarray:
    """Row-wise reflection vectors; zero rows encode the identity."""
    diff = -np.array(z, dtype=float, copy=True)
    diff[..., -1] += 1.0
    norm = np.linalg.norm(diff, axis=-1, keepdims=True)
    pole = norm < _POLE_TOL
    return np.where(pole, 0.0, diff / np.where(pole, 1.0, norm))


def householder_to(z) -> HouseholderFrame:
    """Frame ``O(z)`` with ``O(z) e_d = z``, via ``u = (e_d - z) / |e_d - z|``."""
    arr = _as_points(z)
    if arr.ndim != 1:
        raise DomainError("householder_to takes a single point")
    u = _householder_vectors(arr)
    if not np.any(u):
        return HouseholderFrame(arr.size)
    u.setflags(write=False)
    return HouseholderFrame(arr.size, u)


def _reflect(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return v - 2.0 * np.sum(u * v, axis=-1, keepdims=True) * u


def apply_frame(frame: HouseholderFrame, v) -> np.ndarray:
    """``(I - 2 u u^T) v`` as ``v - 2 <u, v> u``; ``v`` may be ``(d,)`` or ``(n, d)``."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != frame.d:
        raise DomainError(f"vector length {v.shape[-1]} does not match frame dimension {frame.d}")
    if frame.u is None:
        return v.copy()
    return _reflect(frame.u, v)


def gram_schmidt_frame(z) -> np.ndarray:
    """A dense orthogonal matrix with last column ``z``, by Gram-Schmidt completion.

    An alternative to :func:`householder_to`: any orthogonal ``O`` with
    ``O e_d = z`` produces the same increment law.
    """
    z = _as_points(z)
    d = z.size
    basis = [z]
    for e in np.eye(d):
        w = e - sum(np.dot(b, e) * b for b in basis)
        n = np.linalg.norm(w)
        if n > 1e-8:
            basis.append(w / n)
        if len(basis) == d:
            break
    q = np.column_stack(basis[1:] + basis[:1])
    return q


@dataclass(frozen=True)
class IncrementDraw:
    """An increment together with the internal draws that produced it.

    ``point = O(z) (2 sqrt(X (1 - X)) Y, 1 - 2X)`` where ``radial`` is ``X`` and
    ``angular`` is ``Y``. Array fields gain a leading batch axis when drawn
    with ``size``.
    """

    point: np.ndarray
    radial: np.ndarray | float
    angular: np.ndarray
    time: float
    start: np.ndarray

    @property
    def cos_dist(self):
        """``<point, start>``, which equals ``1 - 2 X``."""
        return np.sum(self.point * self.start, axis=-1)

    def reconstruct(self) -> np.ndarray:
        x = np.asarray(self.radial, dtype=float)
        local = np.concatenate(
            [2.0 * np.sqrt(x * (1.0 - x))[..., None] * self.angular, (1.0 - 2.0 * x)[..., None]],
            axis=-1,
        )
        return _reflect(_householder_vectors(self.start), local)


def _normalise(points: np.ndarray) -> np.ndarray:
    global renormalization_events
    norms = np.linalg.norm(points, axis=-1, keepdims=True)
    renormalization_events += int(np.count_nonzero(np.abs(norms - 1.0) > _DRIFT_TOL))
    return points / norms


def _rotate_plane(z: np.ndarray, angle: np.ndarray) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    x0, x1 = z[..., 0], z[..., 1]
    return np.stack([c * x0 - s * x1, s * x0 + c * x1], axis=-1)


def _circle_draw(z: np.ndarray, t: float, rng: RngStream, size) -> tuple[np.ndarray, np.ndarray]:
    n = _batch_size(z, size)
    angle = math.sqrt(t) * np.asarray(standard_normal(rng, n))
    base = z if n is None else np.broadcast_to(z, (n, 2))
    return _normalise(_rotate_plane(base, angle)), angle


def sample_circle_increment(z, t: float, rng: RngStream, size=None) -> np.ndarray:
    """Brownian increment on ``S^1``: rotate ``z`` by an angle ``W ~ N(0, t)``."""
    if not (t > 0):
        raise DomainError(f"t must be positive, got {t}")
    z = _as_points(z)
    if z.shape[-1] != 2:
        raise DomainError("the circle sampler needs d = 2")
    return _circle_draw(z, t, rng, size)[0]


def _batch_size(z: np.ndarray, size) -> int | None:
    if z.ndim == 2:
        if size is not None and size != z.shape[0]:
            raise DomainError("size does not match the number of starting points")
        return z.shape[0]
    return None if size is None else int(size)


def sample_increment(
    z,
    t: float,
    rng: RngStream,
    size: int | None = None,
    *,
    approx: bool = False,
    exact_floor: float = EXACT_FLOOR,
    frame: Callable[[np.ndarray], np.ndarray] | None = None,
) -> IncrementDraw:
    """Exact draw of ``Z_t`` given ``Z_0 = z``.

    ``z`` is a single point (with optional ``size`` for a batch from that
    point) or an ``(n, d)`` array of starts, one draw each. ``frame``
    optionally replaces the Householder map by a function returning a dense
    orthogonal matrix with ``O e_d = z`` (single start only).

    Times below ``exact_floor`` need ``approx=True`` (Gaussian approximation
    of the lineage count); for ``d = 2`` the pole increment is ``exp(iW) e_2``.
    """
    if not (t > 0):
        raise DomainError(f"t must be positive, got {t}")
    z = _as_points(z)
    d = z.shape[-1]
    n = _batch_size(z, size)
    if d == 2:
        # exp(iW) applied to the pole e_2, carried to z by the frame; the
        # components are stored so that reconstruction is exact
        angle = math.sqrt(t) * np.asarray(standard_normal(rng, n))
        x = np.sin(0.5 * angle) ** 2
        y = np.where(np.sin(angle) < 0, -1.0, 1.0)[..., None]
    else:
        half = 0.5 * (d - 1)
        law = WrightFisherLaw(half, half, 0.0, t)
        x = np.asarray(sample_wf_components(law, rng, n, approx=approx, exact_floor=exact_floor).value)
        y = uniform_sphere(d - 1, rng, n)
    local = np.concatenate(
        [2.0 * np.sqrt(x * (1.0 - x))[..., None] * y, (1.0 - 2.0 * x)[..., None]], axis=-1
    )
    if frame is not None:
        if z.ndim != 1:
            raise DomainError("custom frames take a single starting point")
        point = local @ np.asarray(frame(z)).T
    else:
        point = _reflect(_householder_vectors(z), local)
    point = _normalise(point)
    start = np.array(np.broadcast_to(z, point.shape))
    return IncrementDraw(point, x if n is not None else float(x), y, t, start)


def sample_path(
    z0,
    times: Sequence[float],
    rng: RngStream,
    size: int | None = None,
    *,
    approx: bool = False,
    exact_floor: float = EXACT_FLOOR,
) -> list[SpherePoint] | np.ndarray:
    """Exact samples of ``(Z_{t_1}, ..., Z_{t_k})`` by chaining increments.

    Without ``size`` returns a list of :class:`SpherePoint`; with ``size``
    returns an array of shape ``(size, k, d)``.
    """
    times = [float(s) for s in times]
    prev = 0.0
    for s in times:
        if not (s > prev):
            raise DomainError("times must be positive and strictly increasing")
        prev = s
    z = _as_points(z0)
    if z.ndim != 1:
        raise DomainError("sample_path takes a single starting point")
    current = z if size is None else np.broadcast_to(z, (int(size), z.size))
    out = []
    prev = 0.0
    for s in times:
        current = sample_increment(current, s - prev, rng, approx=approx, exact_floor=exact_floor).point
        out.append(current)
        prev = s
    if size is None:
        return [SpherePoint(p) for p in out]
    if not out:
        return np.empty((int(size), 0, z.size))
    return np.stack(out, axis=1)


def sample_increment_radius(
    z,
    radius: float,
    t: float,
    rng: RngStream,
    size: int | None = None,
    *,
    approx: bool = False,
    exact_floor: float = EXACT_FLOOR,
) -> np.ndarray:
    """Increment of Brownian motion on the sphere of radius ``radius``.

    Uses ``R Z_{t / R^2}`` for the unit-sphere motion ``Z`` started at ``z / R``.
    Note the exact-regime floor applies to the rescaled time ``t / R^2``.
    """
    if not (radius > 0):
        raise DomainError(f"radius must be positive, got {radius}")
    z = np.asarray(z, dtype=float)
    norms = np.linalg.norm(z, axis=-1)
    if np.any(np.abs(norms - radius) > _UNIT_TOL * max(radius, 1.0)):
        raise DomainError(f"starting point does not lie on the sphere of radius {radius}")
    draw = sample_increment(z / radius, t / radius**2, rng, size, approx=approx, exact_floor=exact_floor)
    return radius * draw.point


def geodesic_distance(z, w) -> np.ndarray | float:
    """Great-circle distance ``arccos <z, w>`` (inner product clamped to [-1, 1])."""
    z = np.asarray(z.coords if isinstance(z, SpherePoint) else z, dtype=float)
    w = np.asarray(w.coords if isinstance(w, SpherePoint) else w, dtype=float)
    if z.shape[-1] != w.shape[-1]:
        raise DomainError("dimension mismatch")
    out = np.arccos(np.clip(np.sum(z * w, axis=-1), -1.0, 1.0))
    return float(out) if np.ndim(out) == 0 else out
